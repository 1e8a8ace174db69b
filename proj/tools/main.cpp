// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: training, inference, paired-set evaluation,
// kernel spectrum and receptive-field analysis, and cost accounting.
// Exit codes: 0 success, 1 usage error, 2 runtime error. All
// randomness flows from --seed; CASDYF_THREADS caps parallelism
// (1, the default, is fully deterministic).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "casdyf/analysis.hpp"
#include "casdyf/checkpoint.hpp"
#include "casdyf/image_io.hpp"
#include "casdyf/metrics.hpp"
#include "casdyf/trainer.hpp"

namespace fs = std::filesystem;
using namespace casdyf;

#ifdef CASDYF_REAL64
using real = double;
#else
using real = float;
#endif

namespace {

ModelConfig load_config(const std::string& path) {
  if (path.empty()) return ModelConfig{};
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return ModelConfig::from_json(text);
}

struct TrainArgs {
  std::string data, out = "runs/default", config, strategy, resume, dump_synth;
  std::uint64_t steps = 2000, seed = 0, eval_every = 200, ckpt_every = 500;
  index_t batch = 4, patch = 32, synth_count = 0, synth_size = 64, holdout = 8;
  double lr = 4e-4, lr_min = 1e-6, lambda = 0.1;
  bool no_augment = false;
};

int run_train(const TrainArgs& a) {
  ModelConfig cfg = load_config(a.config);
  if (!a.strategy.empty()) cfg.strategy = branch_strategy_from_string(a.strategy);

  std::vector<ImagePair<real>> pairs;
  if (!a.data.empty()) {
    pairs = load_paired_dir<real>(a.data);
  } else {
    const index_t count = a.synth_count > 0 ? a.synth_count : 64;
    std::fprintf(stderr, "no --data given: generating %lld synthetic pairs at %lldx%lld\n",
                 static_cast<long long>(count), static_cast<long long>(a.synth_size),
                 static_cast<long long>(a.synth_size));
    pairs = make_synth_dataset<real>(count, a.synth_size, a.synth_size, a.seed);
    if (!a.dump_synth.empty()) write_paired_dir(a.dump_synth, pairs);
  }
  if (static_cast<index_t>(pairs.size()) <= a.holdout)
    throw std::runtime_error("holdout " + std::to_string(a.holdout) +
                             " leaves no training images (dataset has " +
                             std::to_string(pairs.size()) + ")");
  std::vector<ImagePair<real>> test(pairs.end() - a.holdout, pairs.end());
  pairs.resize(pairs.size() - static_cast<std::size_t>(a.holdout));

  Model<real> model(cfg, a.seed);
  std::fprintf(stderr, "model: %lld learned parameters, strategy=%s\n",
               static_cast<long long>(model.store().learned_scalar_count()),
               to_string(cfg.strategy).c_str());

  TrainOptions opts;
  opts.steps = a.steps;
  opts.batch_size = a.batch;
  opts.patch = a.patch;
  opts.seed = a.seed;
  opts.lambda = a.lambda;
  opts.eta0 = a.lr;
  opts.eta_min = a.lr_min;
  opts.augment = !a.no_augment;
  opts.eval_every = a.eval_every;
  opts.ckpt_every = a.ckpt_every;
  opts.out_dir = a.out;
  if (!a.resume.empty()) opts.resume_from = a.resume;

  TrainReport report = fit(model, pairs, test, opts);
  if (report.aborted_nan) {
    std::fprintf(stderr, "training aborted on a non-finite loss; last checkpoint: %s\n",
                 report.final_checkpoint.c_str());
    return 2;
  }
  const StepRecord& last = report.records.back();
  std::printf("final step %llu: loss %.6f", static_cast<unsigned long long>(last.step),
              last.loss);
  if (last.psnr) std::printf(", test psnr %.2f dB, ssim %.4f", *last.psnr, *last.ssim);
  std::printf("\ncheckpoint: %s\nreport: %s\n", report.final_checkpoint.c_str(),
              report.csv_path.c_str());
  return 0;
}

int run_infer(const std::string& ckpt, const std::string& input, const std::string& output) {
  Model<real> model = load_model<real>(ckpt);
  Tensor<real> hazy = image_to_tensor<real>(read_ppm(input));
  Tensor<real> out = model.infer(hazy);
  write_ppm(output, tensor_to_image(out));
  std::printf("wrote %s\n", output.c_str());
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& data, const std::string& csv) {
  Model<real> model = load_model<real>(ckpt);
  auto pairs = load_paired_dir<real>(data);
  double sum_psnr = 0, sum_ssim = 0, sum_in_psnr = 0;
  std::ofstream os;
  if (!csv.empty()) {
    os.open(csv, std::ios::trunc);
    os << "name,psnr_in,psnr,ssim\n";
  }
  for (const auto& p : pairs) {
    Tensor<real> out = model.infer(p.hazy);
    for (auto& v : out.data) v = std::clamp(v, real(0), real(1));
    const double pin = cap_psnr(psnr(p.hazy, p.clear));
    const double pout = cap_psnr(psnr(out, p.clear));
    const double s = ssim(out, p.clear);
    sum_in_psnr += pin;
    sum_psnr += pout;
    sum_ssim += s;
    if (os.is_open())
      os << p.name << "," << pin << "," << pout << "," << s << "\n";
  }
  const double n = static_cast<double>(pairs.size());
  std::printf("%zu images: hazy psnr %.2f dB -> dehazed psnr %.2f dB, ssim %.4f\n",
              pairs.size(), sum_in_psnr / n, sum_psnr / n, sum_ssim / n);
  return 0;
}

int run_spectrum(const std::string& base, const std::string& dilations_csv,
                 const std::string& mode_str, int size, const std::string& out) {
  std::vector<int> dilations;
  std::stringstream ss(dilations_csv);
  std::string item;
  while (std::getline(ss, item, ',')) dilations.push_back(std::stoi(item));
  if (dilations.empty()) throw std::runtime_error("empty --dilations");
  const SpectrumMode mode = spectrum_mode_from_string(mode_str);
  SpectrumReport rep;
  if (mode == SpectrumMode::single) {
    rep = kernel_spectrum(base_kernel(base), 3, dilations[0], size);
  } else {
    rep = composite_spectrum(base_kernel(base), 3, dilations, mode, size);
  }
  rep.base = base;
  write_spectrum_csv(out, rep);
  std::printf("wrote %s (%d x %d magnitudes, %lld distinct levels)\n", out.c_str(), size,
              size, static_cast<long long>(distinct_levels(rep.magnitude)));
  return 0;
}

int run_erf(const std::string& ckpt, const std::string& input, const std::string& pixel_csv,
            index_t average, std::uint64_t seed, const std::string& out) {
  Model<real> model = load_model<real>(ckpt);
  Tensor<real> img = image_to_tensor<real>(read_ppm(input));
  Tensor<real> map;
  if (average > 0) {
    map = erf_map_average(model, img, average, seed);
  } else {
    index_t c = 0, y = img.shape.h / 2, x = img.shape.w / 2;
    if (!pixel_csv.empty()) {
      std::stringstream ss(pixel_csv);
      char comma;
      if (!(ss >> c >> comma >> y >> comma >> x))
        throw std::runtime_error("--pixel expects c,y,x");
    }
    map = erf_map(model, img, c, y, x);
  }
  write_pgm(out, tensor_to_gray(ops::scale(normalize_erf(map), real(1.0 / 255.0))));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_count(const std::string& config, index_t height, index_t width, index_t batch) {
  ModelConfig cfg = load_config(config);
  CostReport rep = count_params_flops(cfg, height, width, batch);
  std::printf("%s\n", rep.to_json().c_str());
  std::fprintf(stderr,
               "this config: %.3fM params, %.3fG FLOPs at %lldx%lld\n"
               "full-scale reference model: 6.23M params, 40.55G FLOPs (calibration "
               "reference only)\n",
               static_cast<double>(rep.total_params) / 1e6,
               static_cast<double>(rep.total_flops()) / 1e9, static_cast<long long>(height),
               static_cast<long long>(width));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascaded dynamic-filter image dehazing: training, inference and analysis"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a model (synthesizes data when --data is absent)");
  train->add_option("--data", ta.data, "paired dataset root (hazy/ and clear/)");
  train->add_option("--out", ta.out, "output directory for checkpoints and the CSV report");
  train->add_option("--steps", ta.steps, "optimizer steps");
  train->add_option("--batch", ta.batch, "batch size");
  train->add_option("--patch", ta.patch, "square patch size (divisible by 4)");
  train->add_option("--seed", ta.seed, "seed for init, sampling and synthesis");
  train->add_option("--lr", ta.lr, "initial learning rate");
  train->add_option("--lr-min", ta.lr_min, "final learning rate of the cosine schedule");
  train->add_option("--lambda", ta.lambda, "frequency loss coefficient");
  train->add_option("--config", ta.config, "model config JSON");
  train->add_option("--strategy", ta.strategy,
                    "branch strategy override (dynamic|fixed-conv|resolution|split)");
  train->add_option("--resume", ta.resume, "checkpoint to resume from");
  train->add_option("--eval-every", ta.eval_every, "evaluation cadence in steps (0 = never)");
  train->add_option("--ckpt-every", ta.ckpt_every, "checkpoint cadence in steps");
  train->add_option("--holdout", ta.holdout, "images held out as the test split");
  train->add_option("--synth", ta.synth_count, "synthetic pair count when no --data");
  train->add_option("--synth-size", ta.synth_size, "synthetic image size");
  train->add_option("--dump-synth", ta.dump_synth, "also write the synthetic pairs here");
  train->add_flag("--no-augment", ta.no_augment, "disable horizontal flips");

  std::string in_ckpt, in_path, out_path;
  auto* infer = app.add_subcommand("infer", "dehaze one PPM image");
  infer->add_option("--ckpt", in_ckpt, "checkpoint file")->required();
  infer->add_option("--input", in_path, "hazy input .ppm")->required();
  infer->add_option("--output", out_path, "output .ppm")->required();

  std::string ev_ckpt, ev_data, ev_csv;
  auto* eval = app.add_subcommand("eval", "evaluate PSNR/SSIM over a paired directory");
  eval->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  eval->add_option("--data", ev_data, "paired dataset root")->required();
  eval->add_option("--csv", ev_csv, "per-image CSV output");

  auto* analyze = app.add_subcommand("analyze", "frequency and receptive-field analysis");
  analyze->require_subcommand(1);
  std::string sp_base = "avg3", sp_dil = "1,3,5", sp_mode = "serial", sp_out = "spectrum.csv";
  int sp_size = 64;
  auto* spectrum = analyze->add_subcommand("spectrum", "kernel frequency magnitudes as CSV");
  spectrum->add_option("--base", sp_base, "base kernel (avg3|laplacian)");
  spectrum->add_option("--dilations", sp_dil, "comma-separated dilations");
  spectrum->add_option("--mode", sp_mode, "single|serial|parallel|taps");
  spectrum->add_option("--size", sp_size, "grid size N");
  spectrum->add_option("--out", sp_out, "output CSV")->required();

  std::string erf_ckpt, erf_input, erf_pixel, erf_out = "erf.pgm";
  index_t erf_avg = 0;
  std::uint64_t erf_seed = 0;
  auto* erf = analyze->add_subcommand("erf", "effective receptive field heat map as PGM");
  erf->add_option("--ckpt", erf_ckpt, "checkpoint file")->required();
  erf->add_option("--input", erf_input, "input .ppm")->required();
  erf->add_option("--pixel", erf_pixel, "output pixel c,y,x (default center, channel 0)");
  erf->add_option("--average", erf_avg, "average over N random output pixels");
  erf->add_option("--seed", erf_seed, "seed for --average pixel draws");
  erf->add_option("--out", erf_out, "output .pgm")->required();

  std::string ct_config;
  index_t ct_h = 256, ct_w = 256, ct_batch = 1;
  auto* count = app.add_subcommand("count", "closed-form parameter and FLOP accounting");
  count->add_option("--config", ct_config, "model config JSON");
  count->add_option("--height", ct_h, "input height");
  count->add_option("--width", ct_w, "input width");
  count->add_option("--batch", ct_batch, "batch size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(ta);
    if (*infer) return run_infer(in_ckpt, in_path, out_path);
    if (*eval) return run_eval(ev_ckpt, ev_data, ev_csv);
    if (*spectrum) return run_spectrum(sp_base, sp_dil, sp_mode, sp_size, sp_out);
    if (*erf) return run_erf(erf_ckpt, erf_input, erf_pixel, erf_avg, erf_seed, erf_out);
    if (*count) return run_count(ct_config, ct_h, ct_w, ct_batch);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
