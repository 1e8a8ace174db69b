// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-scale training objective: at each of the three scales, an L1
// spatial term plus lambda times an L1 term between the 2-D spectra of
// prediction and target, both normalized by the element count of that
// scale. Accumulation happens in double regardless of the tensor dtype.
#pragma once

#include <array>

#include "casdyf/autodiff.hpp"

namespace casdyf {

struct LossConfig {
  double lambda = 0.1;  // frequency-term coefficient
  // per-scale normalizer: the element count of the target at that scale
};

template <typename T>
struct LossValue {
  ad::Value<T> node;      // scalar (1,1,1,1), the backward root
  double total = 0.0;     // double-precision value of the objective
  double spatial = 0.0;   // spatial term after normalization
  double freq = 0.0;      // frequency term after normalization and lambda
};

// single scale: (|pred - target|_1 + lambda*|F(pred) - F(target)|_1) / numel
template <typename T>
LossValue<T> scale_loss(const LossConfig& cfg, const ad::Value<T>& pred,
                        const Tensor<T>& target);

template <typename T>
LossValue<T> multiscale_loss(const LossConfig& cfg, const std::array<ad::Value<T>, 3>& preds,
                             const std::array<Tensor<T>, 3>& targets);

}  // namespace casdyf
