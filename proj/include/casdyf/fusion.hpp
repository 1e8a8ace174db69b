// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Progressive attention fusion. Local fusion gates and merges three
// adjacent branches into the current one with a residual; global fusion
// concatenates all branches and applies three parallel sigmoid-gated
// attention paths (channel, spatial, pixel) around 1x1 convolutions,
// with a residual to the concatenated input.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "casdyf/layers.hpp"

namespace casdyf {

// 1-based neighbor triple for branch i of n: (i,i+1,i+2) at the first
// branch, (i-1,i,i+1) in the middle, (n-2,n-1,n) at the last; indices
// clamp to [1,n] when n < 3.
std::array<index_t, 3> local_fusion_triple(index_t i, index_t n);

template <typename T>
struct LocalFusion {
  GateMlp<T> gate;      // pooled 3*Cb -> hidden -> 3*Cb logits
  ConvBlock<T> merge;   // 1x1: 3*Cb -> Cb
  index_t branch_width = 0;

  static LocalFusion make(ParamStore<T>& store, const std::string& prefix,
                          index_t branch_width);
  // branches[i-1] + merge(sigmoid(gate) * concat(triple))
  ad::Value<T> forward(const std::vector<ad::Value<T>>& branches, index_t i,
                       Mode mode) const;
};

template <typename T>
struct GlobalFusion {
  ConvBlock<T> entry;     // 1x1: C -> C
  GateMlp<T> channel_mlp; // pooled C -> C/4 -> C gates
  ConvBlock<T> spatial;   // 7x7 on the channel-mean plane
  ConvBlock<T> pixel;     // 1x1: C -> C gates
  ConvBlock<T> exit;      // 1x1: C -> C
  index_t channels = 0;

  static GlobalFusion make(ParamStore<T>& store, const std::string& prefix,
                           index_t channels);
  ad::Value<T> forward(const std::vector<ad::Value<T>>& branches, Mode mode) const;
};

}  // namespace casdyf
