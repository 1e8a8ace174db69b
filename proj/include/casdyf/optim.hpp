// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Adaptive-moment optimizer with bias correction, and the cosine
// annealing rate schedule eta(t) = eta_min + (eta0-eta_min)(1+cos(pi
// t/T))/2 with exact endpoint handling.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "casdyf/checkpoint.hpp"
#include "casdyf/params.hpp"

namespace casdyf {

struct ScheduleConfig {
  double eta0 = 4e-4;      // 2e-4 profile for real-data runs
  double eta_min = 1e-6;
  std::uint64_t total_steps = 1;

  void validate() const;
};

// t clamps to [0, T]; t=0 returns eta0 exactly, t>=T returns eta_min
// exactly; monotone non-increasing in between.
double cosine_lr(const ScheduleConfig& cfg, std::uint64_t step);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamStore<T>& store, const AdamConfig& cfg);

  // applies the update to every learned entry and clears its gradient;
  // throws on a non-finite gradient, naming the parameter
  void step(ParamStore<T>& store, double lr);

  std::uint64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  OptimSnapshot snapshot(const ParamStore<T>& store) const;
  void restore(const OptimSnapshot& snap, const ParamStore<T>& store);

 private:
  AdamConfig cfg_{};
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> m_, v_;  // aligned with learned entries in store order
  std::vector<std::string> names_;
};

}  // namespace casdyf
