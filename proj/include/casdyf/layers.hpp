// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Composite layers shared by the network modules: conv blocks with
// optional batch norm and activation, the U-shape down/up transitions,
// and small gate MLPs.
#pragma once

#include <optional>
#include <string>

#include "casdyf/params.hpp"

namespace casdyf {

enum class Mode { train, eval };

inline constexpr double kBnMomentum = 0.1;
inline constexpr double kBnEps = 1e-5;

template <typename T>
struct BnParams {
  ad::Value<T> gamma, beta, running_mean, running_var;

  static BnParams make(ParamStore<T>& store, const std::string& prefix, index_t channels);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const;
};

enum class Act { none, relu };

template <typename T>
struct ConvBlock {
  ad::Value<T> weight;
  std::optional<ad::Value<T>> bias;
  std::optional<BnParams<T>> bn;
  ops::Conv2dSpec spec;
  Act act = Act::none;

  struct Opts {
    int kernel = 3;
    int stride = 1;
    int dilation = 1;
    int groups = 1;
    ops::PadMode pad_mode = ops::PadMode::reflect;
    int pad = -1;  // -1: same-size padding dilation*(k-1)/2
    bool with_bias = true;
    bool with_bn = false;
    Act act = Act::none;
  };

  static ConvBlock make(ParamStore<T>& store, const std::string& prefix, index_t cin,
                        index_t cout, const Opts& opts);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const;

  index_t param_count() const;
};

// stride-2 3x3 conv; halves H,W
template <typename T>
struct Downsample {
  ConvBlock<T> conv;
  static Downsample make(ParamStore<T>& store, const std::string& prefix, index_t cin,
                         index_t cout);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const;
};

// bilinear x2 followed by a 3x3 conv; doubles H,W
template <typename T>
struct Upsample {
  ConvBlock<T> conv;
  static Upsample make(ParamStore<T>& store, const std::string& prefix, index_t cin,
                       index_t cout);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const;
};

// GAP -> 1x1 -> ReLU -> 1x1 on pooled vectors; used by the gate paths
template <typename T>
struct GateMlp {
  ConvBlock<T> fc1, fc2;
  static GateMlp make(ParamStore<T>& store, const std::string& prefix, index_t cin,
                      index_t hidden, index_t cout);
  ad::Value<T> forward(const ad::Value<T>& pooled, Mode mode) const;
};

}  // namespace casdyf
