// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Residual multiscale block: serial 3x3 convolutions at increasing
// dilation rates whose taps are concatenated and merged by two 1x1
// convolutions under a residual connection. Small RB/RDB baselines
// share the interface for ablation comparisons.
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "casdyf/layers.hpp"

namespace casdyf {

enum class RefineKind { rmb, rb, rdb, none };

RefineKind refine_kind_from_string(const std::string& s);
std::string to_string(RefineKind k);

template <typename T>
struct RefineBlock {
  virtual ~RefineBlock() = default;
  virtual ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const = 0;
};

template <typename T>
struct Rmb final : RefineBlock<T> {
  std::array<ConvBlock<T>, 3> convs;  // serial taps at dilations d1,d2,d3
  ConvBlock<T> merge1;                // 1x1: 3C -> C
  ConvBlock<T> merge2;                // 1x1: C -> C
  bool parallel_taps = false;         // ablation: taps fed from x instead of the chain

  static Rmb make(ParamStore<T>& store, const std::string& prefix, index_t channels,
                  const std::array<int, 3>& dilations, bool parallel_taps = false);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const override;
};

// plain residual block: conv-relu-conv + x
template <typename T>
struct ResidualBlock final : RefineBlock<T> {
  ConvBlock<T> c1, c2;
  static ResidualBlock make(ParamStore<T>& store, const std::string& prefix,
                            index_t channels);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const override;
};

// small residual dense block: two densely connected 3x3 stages fused by
// a 1x1 conv + x
template <typename T>
struct ResidualDenseBlock final : RefineBlock<T> {
  ConvBlock<T> c1, c2, fuse;
  static ResidualDenseBlock make(ParamStore<T>& store, const std::string& prefix,
                                 index_t channels);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const override;
};

// m refine blocks applied in sequence; m = 0 is the identity
template <typename T>
struct RefineStack {
  std::vector<std::shared_ptr<RefineBlock<T>>> blocks;

  static RefineStack make(ParamStore<T>& store, const std::string& prefix, index_t channels,
                          RefineKind kind, index_t count,
                          const std::array<int, 3>& dilations, bool parallel_taps = false);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const;
};

}  // namespace casdyf
