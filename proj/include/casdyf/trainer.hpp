// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop: seeded patch batches, multi-scale loss, Adam under a
// cosine schedule, periodic evaluation and checkpoints, CSV step
// report. Deterministic for a fixed seed at thread count 1; resuming
// from a checkpoint reproduces the uninterrupted trajectory exactly.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "casdyf/dataset.hpp"
#include "casdyf/loss.hpp"
#include "casdyf/model.hpp"
#include "casdyf/optim.hpp"

namespace casdyf {

struct TrainOptions {
  std::uint64_t steps = 2000;
  index_t batch_size = 4;
  index_t patch = 32;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  double eta0 = 4e-4;
  double eta_min = 1e-6;
  bool augment = true;
  std::uint64_t eval_every = 200;    // 0: never
  std::uint64_t ckpt_every = 500;    // 0: only at the end
  std::string out_dir;               // empty: no files written
  std::optional<std::string> resume_from;
};

struct StepRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double loss_spatial = 0.0;
  double loss_freq = 0.0;
  std::optional<double> psnr;
  std::optional<double> ssim;
};

struct EvalResult {
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

struct TrainReport {
  std::vector<StepRecord> records;
  std::string final_checkpoint;  // path, when out_dir set
  std::string csv_path;
  bool aborted_nan = false;
};

// mean PSNR/SSIM of clamped full-scale outputs against the clear images
template <typename T>
EvalResult evaluate(const Model<T>& model, const std::vector<ImagePair<T>>& test_set);

template <typename T>
TrainReport fit(Model<T>& model, const std::vector<ImagePair<T>>& train_set,
                const std::vector<ImagePair<T>>& test_set, const TrainOptions& opts);

void write_report_csv(const std::string& path, const std::vector<StepRecord>& records);

}  // namespace casdyf
