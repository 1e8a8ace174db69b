// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary PPM (P6) and PGM (P5) at maxval 255, the only image formats
// the CLI reads or writes. Conversion to tensors maps bytes to [0,1]
// and back with round-to-nearest, lossless for valid files.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "casdyf/tensor.hpp"

namespace casdyf {

struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major
};

struct GrayBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> gray;
};

ImageBuffer read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageBuffer& img);
GrayBuffer read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayBuffer& img);

template <typename T>
Tensor<T> image_to_tensor(const ImageBuffer& img);  // (1,3,H,W) in [0,1]
template <typename T>
ImageBuffer tensor_to_image(const Tensor<T>& t);    // clamps to [0,1]
template <typename T>
GrayBuffer tensor_to_gray(const Tensor<T>& t);      // (_,1,H,W), clamps

}  // namespace casdyf
