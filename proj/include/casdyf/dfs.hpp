// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Dynamic feature segmentation. Each level generates a per-sample,
// per-channel k x k kernel from the pooled input
// (softmax(BN(W(GAP(x)))) over the k^2 taps), filters the input with
// it, emits a reduced branch from the filtered part and passes the
// reduced complement x - y to the next level. n-1 levels turn C
// channels into n branches of C/n channels each.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "casdyf/layers.hpp"

namespace casdyf {

// Branch creation alternatives; `dynamic` is the cascade above, the
// others are the comparison strategies (fixed depthwise conv, channel
// split, resolution pyramid).
enum class BranchStrategy { dynamic, fixed_conv, resolution, split };

BranchStrategy branch_strategy_from_string(const std::string& s);
std::string to_string(BranchStrategy s);

template <typename T>
struct DynamicFilterUnit {
  ad::Value<T> gen_weight;  // (k^2*C, C, 1, 1), no bias: BN follows
  BnParams<T> bn;           // over the k^2*C logits
  int kernel = 3;
  index_t channels = 0;

  static DynamicFilterUnit make(ParamStore<T>& store, const std::string& prefix,
                                index_t channels, int kernel);
  // softmax-normalized kernels, shape (N, C, k, k); per (sample,
  // channel) the taps are positive and sum to 1
  ad::Value<T> generate_kernel(const ad::Value<T>& x, Mode mode) const;
};

template <typename T>
struct DfsLevel {
  DynamicFilterUnit<T> unit;       // dynamic strategy
  ConvBlock<T> fixed_filter;       // fixed_conv strategy: learned depthwise k x k
  BnParams<T> bn_y;                // over the filtered map
  ConvBlock<T> out_proj;           // 1x1: C_i -> branch width
  ConvBlock<T> next_proj;          // 1x1: C_i -> C_i - branch width
  BranchStrategy strategy = BranchStrategy::dynamic;
  index_t channels = 0;

  static DfsLevel make(ParamStore<T>& store, const std::string& prefix, index_t channels,
                       index_t branch_width, int kernel, BranchStrategy strategy);
  // returns (branch_raw, x_next); branch_raw = out_proj(ReLU(BN(y))),
  // x_next = next_proj(x - y)
  std::pair<ad::Value<T>, ad::Value<T>> split(const ad::Value<T>& x, Mode mode) const;
};

struct CascadeConfig {
  index_t channels = 32;    // C, divisible by branches
  index_t branches = 4;     // n
  int kernel = 3;           // k
  BranchStrategy strategy = BranchStrategy::dynamic;

  index_t branch_width() const { return channels / branches; }
  // level inputs are C, (n-1)C/n, ..., 2C/n
  index_t level_channels(index_t level) const {
    return (branches - level) * branch_width() + branch_width();
  }
  void validate() const;
};

template <typename T>
struct Cascade {
  CascadeConfig config;
  std::vector<DfsLevel<T>> levels;  // n-1 levels (dynamic / fixed_conv)

  static Cascade make(ParamStore<T>& store, const std::string& prefix,
                      const CascadeConfig& config);
  // n branches of C/n channels each; the final branch is the last
  // complement passed through verbatim
  std::vector<ad::Value<T>> forward(const ad::Value<T>& x, Mode mode) const;
};

}  // namespace casdyf
