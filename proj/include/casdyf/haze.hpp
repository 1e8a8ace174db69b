// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic haze for desk-scale experiments: the scattering model
// I = J*t + A*(1-t) with t = exp(-beta*d) over smooth random depth
// fields, applied to procedurally generated clear scenes.
#pragma once

#include <array>

#include "casdyf/rng.hpp"
#include "casdyf/tensor.hpp"

namespace casdyf {

template <typename T>
struct HazeParams {
  std::array<double, 3> atmosphere{0.8, 0.8, 0.8};  // A per channel, in [0,1]
  double beta = 1.0;                                // scattering coefficient, > 0
  Tensor<T> depth;                                  // (1,1,H,W), >= 0
};

template <typename T>
Tensor<T> synth_haze(const Tensor<T>& clear, const HazeParams<T>& params);

// smooth random field in [0,1]: a few low-frequency cosines, min-max
// normalized
template <typename T>
Tensor<T> smooth_field(index_t h, index_t w, Rng& rng, int waves = 4);

// procedural clear scene: smooth color base plus solid rectangles for
// hard edges, values inside [0.03, 0.97]
template <typename T>
Tensor<T> synth_clear_image(index_t h, index_t w, Rng& rng);

template <typename T>
struct ImagePair {
  Tensor<T> hazy, clear;  // (1,3,H,W) each, values in [0,1]
  std::string name;
};

template <typename T>
std::vector<ImagePair<T>> make_synth_dataset(index_t count, index_t h, index_t w,
                                             std::uint64_t seed,
                                             std::array<double, 2> beta_range = {0.5, 2.0},
                                             std::array<double, 2> atmo_range = {0.6, 0.95});

}  // namespace casdyf
