// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint file: 8-byte magic "CDYF0001", a u64 little-endian length,
// a UTF-8 JSON manifest (config, tensor directory with
// name/shape/dtype/offset, optimizer/schedule/RNG state), then raw
// little-endian tensor payloads in directory order.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "casdyf/model.hpp"

namespace casdyf {

struct ScheduleState {
  std::uint64_t step = 0;
  std::uint64_t total_steps = 0;
  double eta0 = 4e-4;
  double eta_min = 1e-6;
};

// dtype-erased tensor payload as stored on disk
struct RawTensor {
  Shape shape{};
  std::string dtype;          // "f32" | "f64"
  std::vector<std::uint8_t> bytes;

  template <typename T>
  Tensor<T> to_tensor() const;  // widens or narrows to T
};

struct OptimSnapshot {
  std::uint64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  // first/second moment per learned parameter, keyed by parameter name
  std::map<std::string, RawTensor> m, v;
};

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;
  ModelConfig config;
  std::string dtype;  // dtype the parameters were saved at
  std::vector<std::pair<std::string, RawTensor>> tensors;  // store order
  std::optional<OptimSnapshot> optim;
  std::optional<ScheduleState> schedule;
  std::optional<std::array<std::uint64_t, 4>> rng_state;
};

template <typename T>
Checkpoint snapshot(const ModelConfig& cfg, const ParamStore<T>& store);

void write_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::string& path);

// Copies checkpoint tensors into the store; shapes must match. Values
// widen (f32 file into f64 run) or narrow exactly per IEEE rounding.
template <typename T>
void apply_to_store(const Checkpoint& ck, ParamStore<T>& store);

// Convenience: build the model a checkpoint describes and load it.
template <typename T>
Model<T> load_model(const std::string& path);

}  // namespace casdyf
