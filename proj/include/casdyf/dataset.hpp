// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Paired-directory loading (<root>/hazy/<name>.ppm matched with
// <root>/clear/<name>.ppm) and aligned patch sampling with multi-scale
// targets.
#pragma once

#include <string>
#include <vector>

#include "casdyf/haze.hpp"

namespace casdyf {

template <typename T>
std::vector<ImagePair<T>> load_paired_dir(const std::string& root);

template <typename T>
void write_paired_dir(const std::string& root, const std::vector<ImagePair<T>>& pairs);

template <typename T>
struct PatchSample {
  Tensor<T> hazy;           // (1,3,s,s)
  Tensor<T> clear;          // (1,3,s,s)
  Tensor<T> clear_half;     // (1,3,s/2,s/2)
  Tensor<T> clear_quarter;  // (1,3,s/4,s/4)
};

// identical crop window (and optional horizontal flip) applied to both
// images; targets at 1/2 and 1/4 come from resizing the clear patch
template <typename T>
PatchSample<T> sample_patch(const ImagePair<T>& pair, index_t size, Rng& rng,
                            bool augment = false);

template <typename T>
PatchSample<T> sample_patch_seeded(const ImagePair<T>& pair, index_t size,
                                   std::uint64_t seed, bool augment = false);

}  // namespace casdyf
