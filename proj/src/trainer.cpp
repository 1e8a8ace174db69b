// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "casdyf/metrics.hpp"

namespace casdyf {

namespace fs = std::filesystem;

template <typename T>
EvalResult evaluate(const Model<T>& model, const std::vector<ImagePair<T>>& test_set) {
  EvalResult res;
  if (test_set.empty()) return res;
  for (const auto& pair : test_set) {
    Tensor<T> out = model.infer(pair.hazy);
    for (auto& v : out.data) v = std::clamp(v, T(0), T(1));
    res.mean_psnr += cap_psnr(psnr(out, pair.clear));
    res.mean_ssim += ssim(out, pair.clear);
  }
  res.mean_psnr /= static_cast<double>(test_set.size());
  res.mean_ssim /= static_cast<double>(test_set.size());
  return res;
}

namespace {

template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& parts) {
  const Shape& s = parts[0].shape;
  Tensor<T> out({static_cast<index_t>(parts.size()), s.c, s.h, s.w});
  for (std::size_t i = 0; i < parts.size(); ++i)
    std::copy(parts[i].data.begin(), parts[i].data.end(),
              out.data.begin() +
                  static_cast<std::ptrdiff_t>(i * parts[i].data.size()));
  return out;
}

std::string ckpt_path(const std::string& dir, std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step%06llu.cdyf", static_cast<unsigned long long>(step));
  return (fs::path(dir) / buf).string();
}

}  // namespace

void write_report_csv(const std::string& path, const std::vector<StepRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("report: cannot open '" + path + "'");
  os << "step,lr,loss,loss_spatial,loss_freq,psnr,ssim\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%llu,%.10g,%.10g,%.10g,%.10g",
                  static_cast<unsigned long long>(r.step), r.lr, r.loss, r.loss_spatial,
                  r.loss_freq);
    os << buf;
    if (r.psnr)
      os << "," << cap_psnr(*r.psnr);
    else
      os << ",";
    if (r.ssim)
      os << "," << *r.ssim;
    else
      os << ",";
    os << "\n";
  }
}

template <typename T>
TrainReport fit(Model<T>& model, const std::vector<ImagePair<T>>& train_set,
                const std::vector<ImagePair<T>>& test_set, const TrainOptions& opts) {
  if (train_set.empty()) throw std::invalid_argument("fit: empty training set");
  TrainReport report;
  ScheduleConfig sched;
  sched.eta0 = opts.eta0;
  sched.eta_min = opts.eta_min;
  sched.total_steps = opts.steps;
  LossConfig loss_cfg;
  loss_cfg.lambda = opts.lambda;

  Adam<T> optim(model.store(), AdamConfig{});
  Rng data_rng(opts.seed + 0x5eedULL);
  std::uint64_t start_step = 0;

  if (opts.resume_from) {
    Checkpoint ck = read_checkpoint(*opts.resume_from);
    apply_to_store(ck, model.store());
    if (ck.optim) optim.restore(*ck.optim, model.store());
    if (ck.schedule) {
      start_step = ck.schedule->step;
      sched.eta0 = ck.schedule->eta0;
      sched.eta_min = ck.schedule->eta_min;
      sched.total_steps = ck.schedule->total_steps;
    }
    if (ck.rng_state) data_rng.set_state(*ck.rng_state);
  }

  if (!opts.out_dir.empty()) fs::create_directories(opts.out_dir);

  auto save = [&](std::uint64_t step) -> std::string {
    if (opts.out_dir.empty()) return {};
    Checkpoint ck = snapshot(model.config(), model.store());
    ck.optim = optim.snapshot(model.store());
    ck.schedule = ScheduleState{step, sched.total_steps, sched.eta0, sched.eta_min};
    ck.rng_state = data_rng.state();
    const std::string path = ckpt_path(opts.out_dir, step);
    write_checkpoint(path, ck);
    return path;
  };

  std::string last_good = opts.resume_from.value_or("");

  for (std::uint64_t step = start_step; step < opts.steps; ++step) {
    // assemble the batch
    std::vector<Tensor<T>> hazy_parts, clear_parts, half_parts, quarter_parts;
    for (index_t b = 0; b < opts.batch_size; ++b) {
      const auto& pair =
          train_set[data_rng.next_below(static_cast<std::uint64_t>(train_set.size()))];
      PatchSample<T> patch = sample_patch(pair, opts.patch, data_rng, opts.augment);
      hazy_parts.push_back(std::move(patch.hazy));
      clear_parts.push_back(std::move(patch.clear));
      half_parts.push_back(std::move(patch.clear_half));
      quarter_parts.push_back(std::move(patch.clear_quarter));
    }
    ad::Value<T> hazy = ad::leaf(stack_batch(hazy_parts), false);
    std::array<Tensor<T>, 3> targets{stack_batch(clear_parts), stack_batch(half_parts),
                                     stack_batch(quarter_parts)};

    StepRecord rec;
    rec.step = step + 1;
    rec.lr = cosine_lr(sched, step);
    bool nan_abort = false;
    try {
      typename Model<T>::Outputs out = model.forward(hazy, Mode::train);
      LossValue<T> loss =
          multiscale_loss(loss_cfg, {out.full, out.half, out.quarter}, targets);
      rec.loss = loss.total;
      rec.loss_spatial = loss.spatial;
      rec.loss_freq = loss.freq;
      if (!std::isfinite(loss.total)) {
        nan_abort = true;
      } else {
        model.store().zero_grads();
        ad::backward(loss.node);
        optim.step(model.store(), rec.lr);
      }
    } catch (const std::runtime_error&) {
      // non-finite value surfaced inside the forward/backward pass
      nan_abort = true;
    }
    if (nan_abort) {
      report.aborted_nan = true;
      report.records.push_back(rec);
      break;
    }

    if (opts.eval_every > 0 && !test_set.empty() &&
        ((step + 1) % opts.eval_every == 0 || step + 1 == opts.steps)) {
      EvalResult ev = evaluate(model, test_set);
      rec.psnr = ev.mean_psnr;
      rec.ssim = ev.mean_ssim;
    }
    report.records.push_back(rec);

    if (opts.ckpt_every > 0 && (step + 1) % opts.ckpt_every == 0 && step + 1 < opts.steps)
      last_good = save(step + 1);
  }

  if (!report.aborted_nan) {
    report.final_checkpoint = save(opts.steps);
  } else {
    report.final_checkpoint = last_good;  // last checkpoint before the bad step
  }
  if (!opts.out_dir.empty()) {
    report.csv_path = (fs::path(opts.out_dir) / "train_report.csv").string();
    write_report_csv(report.csv_path, report.records);
  }
  return report;
}

template EvalResult evaluate<float>(const Model<float>&, const std::vector<ImagePair<float>>&);
template EvalResult evaluate<double>(const Model<double>&,
                                     const std::vector<ImagePair<double>>&);
template TrainReport fit<float>(Model<float>&, const std::vector<ImagePair<float>>&,
                                const std::vector<ImagePair<float>>&, const TrainOptions&);
template TrainReport fit<double>(Model<double>&, const std::vector<ImagePair<double>>&,
                                 const std::vector<ImagePair<double>>&, const TrainOptions&);

}  // namespace casdyf
