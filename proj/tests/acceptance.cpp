// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line with
// its measured numbers; the exit code is the number of failures.
// Runs single-threaded (CASDYF_THREADS unset or 1) and is fully
// seeded. The heavy criteria (8 and 9) train real models and dominate
// the runtime.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include "casdyf/analysis.hpp"
#include "casdyf/checkpoint.hpp"
#include "casdyf/image_io.hpp"
#include "casdyf/metrics.hpp"
#include "casdyf/trainer.hpp"

using namespace casdyf;
namespace ad = casdyf::ad;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

template <typename T>
Tensor<T> random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(s);
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// central finite differences against the recorded gradients, projected
// onto a fixed random direction
template <typename T>
double grad_check(const std::function<ad::Value<T>(std::vector<ad::Value<T>>&)>& build,
                  std::vector<Tensor<T>> inputs, T h, std::uint64_t seed = 7) {
  Rng rng(seed);
  std::vector<ad::Value<T>> leaves;
  for (auto& t : inputs) leaves.push_back(ad::leaf(t, true));
  ad::Value<T> out = build(leaves);
  Tensor<T> proj(out.shape());
  for (auto& v : proj.data) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  ad::backward(out, proj);
  auto eval = [&](std::vector<Tensor<T>>& xs) {
    std::vector<ad::Value<T>> ls;
    for (auto& t : xs) ls.push_back(ad::leaf(t, false));
    ad::Value<T> o = build(ls);
    double acc = 0.0;
    for (std::size_t i = 0; i < proj.data.size(); ++i)
      acc += static_cast<double>(o.val().data[i]) * static_cast<double>(proj.data[i]);
    return acc;
  };
  double max_fd = 0.0, max_diff = 0.0;
  std::vector<double> ans, fds;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor<T>& g = leaves[k].grad();
    for (std::size_t i = 0; i < inputs[k].data.size(); ++i) {
      const T orig = inputs[k].data[i];
      inputs[k].data[i] = orig + h;
      const double fp = eval(inputs);
      inputs[k].data[i] = orig - h;
      const double fm = eval(inputs);
      inputs[k].data[i] = orig;
      const double fd = (fp - fm) / (2.0 * static_cast<double>(h));
      ans.push_back(static_cast<double>(g.data[i]));
      fds.push_back(fd);
      max_fd = std::max(max_fd, std::abs(fd));
    }
  }
  const double floor = std::max(max_fd, 1e-6);
  for (std::size_t i = 0; i < fds.size(); ++i)
    max_diff = std::max(max_diff, std::abs(ans[i] - fds[i]));
  return max_diff / floor;
}

// ---- criterion 1: gradient suite ---------------------------------------------

template <typename T>
double worst_gradient_error() {
  Rng rng(100);
  const T h = sizeof(T) == 4 ? T(1e-3) : T(1e-5);
  double worst = 0.0;
  auto track = [&](double v) { worst = std::max(worst, v); };

  // primitive operations
  track(grad_check<T>(
      [](auto& in) {
        ops::Conv2dSpec s;
        s.pad = 1;
        return ad::conv2d(in[0], in[1], std::optional(in[2]), s);
      },
      {random_tensor<T>({2, 3, 6, 6}, rng), random_tensor<T>({4, 3, 3, 3}, rng),
       random_tensor<T>({1, 4, 1, 1}, rng)},
      h));
  track(grad_check<T>(
      [](auto& in) {
        ops::Conv2dSpec s;
        s.pad = 3;
        s.dilation = 3;
        s.pad_mode = ops::PadMode::zero;
        return ad::conv2d(in[0], in[1], std::nullopt, s);
      },
      {random_tensor<T>({1, 2, 8, 8}, rng), random_tensor<T>({2, 2, 3, 3}, rng)}, h));
  track(grad_check<T>(
      [](auto& in) {
        ops::Conv2dSpec s;
        s.stride = 2;
        s.pad = 1;
        return ad::conv2d(in[0], in[1], std::nullopt, s);
      },
      {random_tensor<T>({1, 2, 8, 8}, rng), random_tensor<T>({4, 2, 3, 3}, rng)}, h));
  track(grad_check<T>(
      [](auto& in) {
        auto rm = ad::leaf(Tensor<T>({1, 3, 1, 1}), false);
        auto rv = ad::leaf(Tensor<T>({1, 3, 1, 1}, T(1)), false);
        return ad::batch_norm(in[0], in[1], in[2], rm, rv, true, 0.1, 1e-5);
      },
      {random_tensor<T>({2, 3, 4, 4}, rng), random_tensor<T>({1, 3, 1, 1}, rng, 0.5, 1.5),
       random_tensor<T>({1, 3, 1, 1}, rng)},
      h));
  track(grad_check<T>(
      [](auto& in) {
        auto rm = ad::leaf(Tensor<T>({1, 3, 1, 1}, T(0.1)), false);
        auto rv = ad::leaf(Tensor<T>({1, 3, 1, 1}, T(1.2)), false);
        return ad::batch_norm(in[0], in[1], in[2], rm, rv, false, 0.1, 1e-5);
      },
      {random_tensor<T>({1, 3, 4, 4}, rng), random_tensor<T>({1, 3, 1, 1}, rng, 0.5, 1.5),
       random_tensor<T>({1, 3, 1, 1}, rng)},
      h));
  track(grad_check<T>([](auto& in) { return ad::softmax_groups(in[0], 9); },
                      {random_tensor<T>({2, 18, 1, 1}, rng, -2, 2)}, h));
  track(grad_check<T>([](auto& in) { return ad::global_avg_pool(in[0]); },
                      {random_tensor<T>({2, 4, 5, 5}, rng)}, h));
  track(grad_check<T>([](auto& in) { return ad::resize_half(in[0]); },
                      {random_tensor<T>({1, 3, 6, 6}, rng)}, h));
  track(grad_check<T>([](auto& in) { return ad::resize_double(in[0]); },
                      {random_tensor<T>({1, 3, 4, 4}, rng)}, h));
  track(grad_check<T>([](auto& in) { return ad::dynamic_filter(in[0], in[1]); },
                      {random_tensor<T>({1, 2, 6, 6}, rng),
                       random_tensor<T>({1, 2, 3, 3}, rng, 0.0, 1.0)},
                      h));

  // composite blocks (eval-mode norm statistics are well defined at batch 1)
  {
    ParamStore<T> store;
    auto lvl = DfsLevel<T>::make(store, "l", 4, 1, 3, BranchStrategy::dynamic);
    store.init_params(5);
    track(grad_check<T>(
        [&](auto& in) {
          auto [branch, next] = lvl.split(in[0], Mode::eval);
          return ad::concat<T>({branch, next});
        },
        {random_tensor<T>({1, 4, 5, 5}, rng)}, h));
  }
  {
    ParamStore<T> store;
    auto rmb = Rmb<T>::make(store, "r", 3, {1, 2, 3});
    store.init_params(6);
    track(grad_check<T>([&](auto& in) { return rmb.forward(in[0], Mode::eval); },
                        {random_tensor<T>({1, 3, 12, 12}, rng)}, h));
  }
  {
    ParamStore<T> store;
    auto lf = LocalFusion<T>::make(store, "lf", 2);
    store.init_params(7);
    track(grad_check<T>(
        [&](auto& in) {
          std::vector<ad::Value<T>> branches{in[0], in[1], in[2]};
          return lf.forward(branches, 2, Mode::eval);
        },
        {random_tensor<T>({1, 2, 4, 4}, rng), random_tensor<T>({1, 2, 4, 4}, rng),
         random_tensor<T>({1, 2, 4, 4}, rng)},
        h));
  }
  {
    ParamStore<T> store;
    auto gf = GlobalFusion<T>::make(store, "gf", 6);
    store.init_params(8);
    track(grad_check<T>(
        [&](auto& in) {
          std::vector<ad::Value<T>> branches{in[0], in[1], in[2]};
          return gf.forward(branches, Mode::eval);
        },
        {random_tensor<T>({1, 2, 4, 4}, rng), random_tensor<T>({1, 2, 4, 4}, rng),
         random_tensor<T>({1, 2, 4, 4}, rng)},
        h));
  }
  {
    ParamStore<T> store;
    ModelConfig cfg;
    cfg.base_channels = 8;
    cfg.branches = 4;
    cfg.rmb_per_branch = 1;
    auto block = CasDyFBlock<T>::make(store, "b", 8, cfg);
    store.init_params(9);
    track(grad_check<T>([&](auto& in) { return block.forward(in[0], Mode::eval); },
                        {random_tensor<T>({1, 8, 8, 8}, rng)}, h));
  }
  return worst;
}

void criterion1() {
  const auto t0 = clk::now();
  const double worst64 = worst_gradient_error<double>();
  const double worst32 = worst_gradient_error<float>();
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  const bool pass = worst64 < 1e-5 && worst32 < 1e-2 && secs < 120.0;
  report(1, pass,
         fmt("gradient suite: worst rel err %.2e (f64, tol 1e-5), %.2e (f32, tol 1e-2), "
             "%.1f s (limit 120)",
             worst64, worst32, secs));
}

// ---- criterion 2: DFS invariants ----------------------------------------------

void criterion2() {
  ParamStore<float> store;
  auto unit = DynamicFilterUnit<float>::make(store, "u", 8, 3);
  store.init_params(2);
  Rng rng(200);
  double worst_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto x = ad::leaf(random_tensor<float>({1, 8, 6, 6}, rng, -2, 2), false);
    auto k = unit.generate_kernel(x, Mode::eval);
    for (index_t c = 0; c < 8; ++c) {
      double sum = 0.0;
      for (index_t i = 0; i < 9; ++i) sum += k.val().plane(0, c)[i];
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
  }

  // constant input: complement is zero everywhere under reflect padding
  ParamStore<float> store2;
  auto lvl = DfsLevel<float>::make(store2, "l", 8, 2, 3, BranchStrategy::dynamic);
  store2.init_params(3);
  auto xc = ad::leaf(Tensor<float>({2, 8, 8, 8}, 0.6f), false);
  auto kern = lvl.unit.generate_kernel(xc, Mode::eval);
  auto complement = ops::sub(xc.val(), ops::dynamic_filter(xc.val(), kern.val()));
  double worst_comp = 0.0;
  for (float v : complement.data) worst_comp = std::max(worst_comp, std::abs((double)v));

  // channel trace
  CascadeConfig cc;
  cc.channels = 32;
  cc.branches = 4;
  const bool trace_ok = cc.level_channels(1) == 32 && cc.level_channels(2) == 24 &&
                        cc.level_channels(3) == 16 && cc.branch_width() == 8;
  ParamStore<float> store3;
  auto cascade = Cascade<float>::make(store3, "c", cc);
  store3.init_params(4);
  Rng rng2(201);
  auto branches = cascade.forward(ad::leaf(random_tensor<float>({1, 32, 8, 8}, rng2), false),
                                  Mode::eval);
  bool widths_ok = branches.size() == 4;
  for (const auto& b : branches) widths_ok = widths_ok && b.shape().c == 8;

  const bool pass = worst_sum < 1e-6 && worst_comp < 1e-6 && trace_ok && widths_ok;
  report(2, pass,
         fmt("DFS invariants: worst tap-sum dev %.2e (tol 1e-6), worst constant-input "
             "complement %.2e (tol 1e-6), trace 32->24->16->8 %s, 4x8-channel branches %s",
             worst_sum, worst_comp, trace_ok ? "ok" : "BAD", widths_ok ? "ok" : "BAD"));
}

// ---- criterion 3: dynamic filter vs oracle --------------------------------------

void criterion3() {
  Rng rng(300);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const index_t n = 1 + static_cast<index_t>(rng.next_below(2));
    const index_t c = 1 + static_cast<index_t>(rng.next_below(4));
    const index_t hw = 5 + static_cast<index_t>(rng.next_below(6));
    auto x = random_tensor<double>({n, c, hw, hw}, rng);
    auto k = random_tensor<double>({n, c, 3, 3}, rng, 0.0, 1.0);
    auto y = ops::dynamic_filter(x, k);
    auto refl = [&](index_t i, index_t nn) {
      while (i < 0 || i >= nn) {
        if (i < 0) i = -i;
        if (i >= nn) i = 2 * nn - 2 - i;
      }
      return i;
    };
    for (index_t nn = 0; nn < n; ++nn)
      for (index_t cc = 0; cc < c; ++cc)
        for (index_t oy = 0; oy < hw; ++oy)
          for (index_t ox = 0; ox < hw; ++ox) {
            double acc = 0.0;
            for (index_t ky = 0; ky < 3; ++ky)
              for (index_t kx = 0; kx < 3; ++kx)
                acc += x.at(nn, cc, refl(oy + ky - 1, hw), refl(ox + kx - 1, hw)) *
                       k.at(nn, cc, ky, kx);
            worst = std::max(worst, std::abs(y.at(nn, cc, oy, ox) - acc));
          }
  }
  report(3, worst < 1e-6,
         fmt("dynamic filter vs nested-loop oracle: 50 cases, max abs diff %.2e (tol 1e-6)",
             worst));
}

// ---- criterion 4: loss oracle -----------------------------------------------------

void criterion4() {
  Rng rng(400);
  auto t = random_tensor<double>({1, 3, 8, 8}, rng, 0, 1);
  LossConfig cfg;
  const double zero = scale_loss(cfg, ad::leaf(t, false), t).total;

  Tensor<double> target({1, 1, 2, 2}, 0.25), pred({1, 1, 2, 2}, 0.75);
  const double fixture = scale_loss(cfg, ad::leaf(pred, false), target).total;

  auto p2 = random_tensor<double>({1, 2, 4, 4}, rng, 0, 1);
  auto t2 = random_tensor<double>({1, 2, 4, 4}, rng, 0, 1);
  LossConfig c0, c1, c2;
  c0.lambda = 0.0;
  c1.lambda = 0.1;
  c2.lambda = 0.2;
  const double l0 = scale_loss(c0, ad::leaf(p2, false), t2).total;
  const double l1 = scale_loss(c1, ad::leaf(p2, false), t2).total;
  const double l2 = scale_loss(c2, ad::leaf(p2, false), t2).total;
  const double lin_dev = std::abs((l2 - l0) - 2.0 * (l1 - l0));

  const bool pass = zero == 0.0 && std::abs(fixture - 0.55) < 1e-6 && lin_dev < 1e-7;
  report(4, pass,
         fmt("loss oracle: identical inputs -> %.1e, fixture %.8f (want 0.55 +- 1e-6), "
             "lambda-linearity dev %.2e (tol 1e-7)",
             zero, fixture, lin_dev));
}

// ---- criterion 5: schedule ---------------------------------------------------------

void criterion5() {
  ScheduleConfig cfg;
  cfg.eta0 = 4e-4;
  cfg.eta_min = 1e-6;
  cfg.total_steps = 10000;
  const bool start_ok = cosine_lr(cfg, 0) == 4e-4;
  const bool end_ok = cosine_lr(cfg, 10000) == 1e-6;
  const double mid_dev = std::abs(cosine_lr(cfg, 5000) - 2.005e-4);
  bool monotone = true;
  double prev = cosine_lr(cfg, 0);
  for (std::uint64_t t = 1; t <= 10000; ++t) {
    const double cur = cosine_lr(cfg, t);
    if (cur > prev) monotone = false;
    prev = cur;
  }
  const bool pass = start_ok && end_ok && mid_dev < 1e-12 && monotone;
  report(5, pass,
         fmt("cosine schedule: eta(0)=4e-4 %s, eta(T)=1e-6 %s, midpoint dev %.2e "
             "(tol 1e-12), monotone over 10000 steps %s",
             start_ok ? "exact" : "BAD", end_ok ? "exact" : "BAD", mid_dev,
             monotone ? "ok" : "BAD"));
}

// ---- criterion 6: spectrum identities ------------------------------------------------

void criterion6() {
  const int N = 64;
  double worst_rep = 0.0;
  for (const char* tag : {"avg3", "laplacian"}) {
    auto base = kernel_spectrum(base_kernel(tag), 3, 1, N);
    for (int d : {2, 3, 5}) {
      auto dil = kernel_spectrum(base_kernel(tag), 3, d, N);
      for (int u = 0; u < N; ++u)
        for (int v = 0; v < N; ++v)
          worst_rep = std::max(
              worst_rep,
              std::abs(dil.magnitude[static_cast<std::size_t>(u * N + v)] -
                       base.magnitude[static_cast<std::size_t>(((d * u) % N) * N +
                                                               (d * v) % N)]));
    }
  }
  auto avg = kernel_spectrum(base_kernel("avg3"), 3, 1, N);
  double avg_max = 0.0;
  for (double v : avg.magnitude) avg_max = std::max(avg_max, v);
  const bool dc_max = avg.magnitude[0] == avg_max;
  auto lap = kernel_spectrum(base_kernel("laplacian"), 3, 1, N);
  const double lap_dc = std::abs(lap.magnitude[0]);

  // the level comparison runs on the tap-merged composite, the response
  // of the block's series-with-parallel-merge topology; the plain
  // product composite provably ties with its components
  auto comp = composite_spectrum(base_kernel("avg3"), 3, {1, 3, 5}, SpectrumMode::taps, N);
  const index_t comp_levels = distinct_levels(comp.magnitude);
  index_t max_single = 0;
  for (int d : {1, 3, 5})
    max_single = std::max(
        max_single, distinct_levels(kernel_spectrum(base_kernel("avg3"), 3, d, N).magnitude));

  const bool pass =
      worst_rep < 1e-10 && dc_max && lap_dc < 1e-12 && comp_levels > max_single;
  report(6, pass,
         fmt("spectra: replication dev %.2e (tol 1e-10), avg3 max at DC %s, laplacian DC "
             "%.1e (tol 1e-12), tap-merged {1,3,5} levels %lld > best single %lld",
             worst_rep, dc_max ? "ok" : "BAD", lap_dc, (long long)comp_levels,
             (long long)max_single));
}

// ---- criterion 7: RMB footprint and ERF radii -----------------------------------------

template <typename T>
index_t support_radius(const RefineStack<T>& stack, const Tensor<T>& x, index_t cy,
                       index_t cx) {
  auto base = stack.forward(ad::leaf(x, false), Mode::eval);
  Tensor<T> xp = x;
  xp.at(0, 0, cy, cx) += T(1);
  auto pert = stack.forward(ad::leaf(xp, false), Mode::eval);
  index_t radius = 0;
  for (index_t c = 0; c < x.shape.c; ++c)
    for (index_t y = 0; y < x.shape.h; ++y)
      for (index_t xx = 0; xx < x.shape.w; ++xx)
        if (base.val().at(0, c, y, xx) != pert.val().at(0, c, y, xx)) {
          const index_t dy = y > cy ? y - cy : cy - y;
          const index_t dx = xx > cx ? xx - cx : cx - xx;
          radius = std::max(radius, std::max(dy, dx));
        }
  return radius;
}

void criterion7() {
  Rng rng(700);
  auto x = random_tensor<float>({1, 4, 40, 40}, rng);
  index_t r_wide = 0, r_narrow = 0;
  {
    ParamStore<float> store;
    auto stack = RefineStack<float>::make(store, "s", 4, RefineKind::rmb, 1, {1, 3, 5});
    store.init_params(71);
    r_wide = support_radius(stack, x, 20, 20);
  }
  {
    ParamStore<float> store;
    auto stack = RefineStack<float>::make(store, "s", 4, RefineKind::rmb, 1, {1, 1, 1});
    store.init_params(71);
    r_narrow = support_radius(stack, x, 20, 20);
  }
  const bool support_ok = r_wide <= 9 && r_narrow <= 3;

  // ERF 90%-mass radius on 5 seeded random-init desk models
  int wins = 0;
  std::string radii;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelConfig wide;  // desk profile
    ModelConfig narrow;
    narrow.dilations = {1, 1, 1};
    Model<float> mw(wide, seed), mn(narrow, seed);
    Tensor<float> img({1, 3, 64, 64});
    Rng rr(900 + seed);
    for (auto& v : img.data) v = static_cast<float>(rr.uniform(0, 1));
    auto map_w = erf_map(mw, img, 0, 32, 32);
    auto map_n = erf_map(mn, img, 0, 32, 32);
    const double rw = effective_radius(map_w, 32, 32);
    const double rn = effective_radius(map_n, 32, 32);
    radii += fmt(" s%llu:%.2f>%.2f", (unsigned long long)seed, rw, rn);
    if (rw > rn) ++wins;
  }
  const bool pass = support_ok && wins == 5;
  report(7, pass,
         fmt("RMB footprint: {1,3,5} support radius %lld (<=9), {1,1,1} radius %lld (<=3); "
             "ERF 90%% radius larger on %d/5 seeds:%s",
             (long long)r_wide, (long long)r_narrow, wins, radii.c_str()));
}

// ---- criterion 8: end-to-end desk training ----------------------------------------------

void criterion8(const std::string& out_root) {
  const auto t0 = clk::now();
  auto data = make_synth_dataset<float>(64, 64, 64, 0);
  std::vector<ImagePair<float>> train(data.begin(), data.begin() + 56);
  std::vector<ImagePair<float>> test(data.begin() + 56, data.end());
  double hazy_psnr = 0.0;
  for (const auto& p : test) hazy_psnr += cap_psnr(psnr(p.hazy, p.clear));
  hazy_psnr /= static_cast<double>(test.size());

  ModelConfig cfg;  // desk profile defaults
  Model<float> model(cfg, 0);
  TrainOptions opts;
  opts.steps = 2000;
  opts.batch_size = 4;
  opts.patch = 32;
  opts.seed = 0;
  opts.eval_every = 500;
  opts.ckpt_every = 0;
  opts.out_dir = out_root + "/criterion8";
  TrainReport rep = fit(model, train, test, opts);
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();

  const double loss10 = rep.records.size() >= 10 ? rep.records[9].loss : 1e9;
  const double loss_final = rep.records.back().loss;
  EvalResult ev = evaluate(model, test);
  const double gain = ev.mean_psnr - hazy_psnr;
  const bool pass = !rep.aborted_nan && gain >= 1.0 && loss_final < 0.5 * loss10 &&
                    secs <= 30.0 * 60.0;
  report(8, pass,
         fmt("desk training (2000 steps, batch 4, seed 0): hazy %.2f dB -> dehazed %.2f dB "
             "(gain %.2f, need >= 1.0); final loss %.4f vs step-10 %.4f (need < 50%%); "
             "%.1f min (limit 30)",
             hazy_psnr, ev.mean_psnr, gain, loss_final, loss10, secs / 60.0));
}

// ---- criterion 9: ablation ordering ---------------------------------------------------

void criterion9() {
  auto data = make_synth_dataset<float>(64, 64, 64, 0);
  std::vector<ImagePair<float>> train(data.begin(), data.begin() + 56);
  std::vector<ImagePair<float>> test(data.begin() + 56, data.end());

  // identical desk config and budget for both strategies; the budget is
  // shortened to keep the suite inside a practical wall time
  const std::uint64_t kSteps = 300;
  int wins = 0;
  bool params_fewer = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double psnr_dyn = 0, psnr_split = 0;
    index_t params_dyn = 0, params_split = 0;
    for (int which = 0; which < 2; ++which) {
      ModelConfig cfg;
      cfg.strategy = which == 0 ? BranchStrategy::dynamic : BranchStrategy::split;
      Model<float> model(cfg, seed);
      TrainOptions opts;
      opts.steps = kSteps;
      opts.batch_size = 4;
      opts.patch = 32;
      opts.seed = seed;
      opts.eval_every = 0;
      opts.ckpt_every = 0;
      fit(model, train, test, opts);
      const double p = evaluate(model, test).mean_psnr;
      if (which == 0) {
        psnr_dyn = p;
        params_dyn = model.store().learned_scalar_count();
      } else {
        psnr_split = p;
        params_split = model.store().learned_scalar_count();
      }
    }
    if (psnr_dyn >= psnr_split) ++wins;
    params_fewer = params_fewer && params_split < params_dyn;
    detail += fmt(" s%llu:%.2f/%.2f", (unsigned long long)seed, psnr_dyn, psnr_split);
  }
  const bool pass = wins >= 2 && params_fewer;
  report(9, pass,
         fmt("branch ablation (300 steps/run): dynamic >= split on %d/3 seeds (need >= 2), "
             "split params strictly fewer: %s; psnr dyn/split per seed:%s",
             wins, params_fewer ? "yes" : "NO", detail.c_str()));
}

// ---- criterion 10: determinism & persistence ---------------------------------------------

void criterion10(const std::string& out_root) {
  auto data = make_synth_dataset<float>(16, 64, 64, 11);
  std::vector<ImagePair<float>> train(data.begin(), data.begin() + 14);
  std::vector<ImagePair<float>> test;

  ModelConfig cfg;  // desk profile
  TrainOptions opts;
  opts.steps = 100;
  opts.batch_size = 4;
  opts.patch = 32;
  opts.seed = 5;
  opts.eval_every = 0;
  opts.ckpt_every = 50;
  opts.out_dir = out_root + "/criterion10_a";

  Model<float> m1(cfg, 5);
  TrainReport r1 = fit(m1, train, test, opts);
  opts.out_dir = out_root + "/criterion10_b";
  Model<float> m2(cfg, 5);
  TrainReport r2 = fit(m2, train, test, opts);

  bool traj_identical = r1.records.size() == r2.records.size();
  for (std::size_t i = 0; traj_identical && i < r1.records.size(); ++i)
    traj_identical = r1.records[i].loss == r2.records[i].loss;
  bool params_identical = true;
  for (std::size_t e = 0; e < m1.store().entries().size(); ++e)
    params_identical = params_identical && m1.store().entries()[e].value.val().data ==
                                               m2.store().entries()[e].value.val().data;

  // resume from the step-50 checkpoint and match the uninterrupted run
  Model<float> m3(cfg, 999);
  TrainOptions ropts = opts;
  ropts.resume_from = out_root + "/criterion10_a/step000050.cdyf";
  ropts.out_dir = out_root + "/criterion10_resume";
  TrainReport r3 = fit(m3, train, test, ropts);
  bool resume_identical = r3.records.size() == 50;
  for (std::size_t i = 0; resume_identical && i < r3.records.size(); ++i)
    resume_identical = r3.records[i].loss == r1.records[i + 50].loss;
  for (std::size_t e = 0; resume_identical && e < m1.store().entries().size(); ++e)
    resume_identical = m1.store().entries()[e].value.val().data ==
                       m3.store().entries()[e].value.val().data;

  // PPM round trip byte-identical
  const std::string p1 = out_root + "/rt1.ppm";
  const std::string p2 = out_root + "/rt2.ppm";
  write_ppm(p1, tensor_to_image(data[0].hazy));
  write_ppm(p2, tensor_to_image(image_to_tensor<float>(read_ppm(p1))));
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::vector<char> b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::vector<char> b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  const bool ppm_ok = !b1.empty() && b1 == b2;

  const bool pass = traj_identical && params_identical && resume_identical && ppm_ok;
  report(10, pass,
         fmt("determinism: 100-step trajectories bit-identical %s, parameters identical %s, "
             "resume-at-50 matches %s, PPM round trip byte-identical %s",
             traj_identical ? "yes" : "NO", params_identical ? "yes" : "NO",
             resume_identical ? "yes" : "NO", ppm_ok ? "yes" : "NO"));
}

// ---- criterion 11: cost accounting ----------------------------------------------------------

void criterion11() {
  // two-conv micro net: formula vs meter, exactly
  const std::uint64_t want_micro =
      static_cast<std::uint64_t>(1) * 8 * 3 * 9 * 16 * 16 +  // conv 3->8, 3x3, 16x16
      static_cast<std::uint64_t>(1) * 3 * 8 * 9 * 16 * 16;   // conv 8->3, 3x3
  Tensor<float> x({1, 3, 16, 16}, 0.4f);
  Tensor<float> w1({8, 3, 3, 3}, 0.01f), b1({1, 8, 1, 1}, 0.0f);
  Tensor<float> w2({3, 8, 3, 3}, 0.01f), b2({1, 3, 1, 1}, 0.0f);
  ops::Conv2dSpec spec;
  spec.pad = 1;
  ops::MacMeter::enable();
  auto y = ops::conv2d(x, w1, &b1, spec);
  ops::conv2d(y, w2, &b2, spec);
  const std::uint64_t got_micro = ops::MacMeter::disable();

  // full desk-profile forward
  ModelConfig cfg;
  Model<float> model(cfg, 3);
  CostReport rep = count_params_flops(cfg, 32, 32);
  const std::uint64_t measured = measure_forward_macs(model, 32, 32);
  const bool params_ok = rep.total_params == model.store().learned_scalar_count();

  const bool pass = got_micro == want_micro && rep.total_macs == measured && params_ok;
  report(11, pass,
         fmt("cost accounting: 2-conv micro net %llu == %llu MACs; desk forward closed-form "
             "%llu == measured %llu MACs; params %lld == store %lld",
             (unsigned long long)want_micro, (unsigned long long)got_micro,
             (unsigned long long)rep.total_macs, (unsigned long long)measured,
             (long long)rep.total_params, (long long)model.store().learned_scalar_count()));
  // calibration reference, reported but never asserted
  std::printf("             full-scale reference model: 6.23M params / 40.55G FLOPs; this "
              "desk profile: %.3fM params / %.3fG FLOPs at 32x32\n",
              static_cast<double>(rep.total_params) / 1e6,
              static_cast<double>(rep.total_flops()) / 1e9);
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";  // skips 8 and 9
  const std::string out_root =
      (fs::temp_directory_path() / "casdyf_acceptance").string();
  fs::remove_all(out_root);
  fs::create_directories(out_root);

  const auto t0 = clk::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  if (!quick) {
    criterion8(out_root);
    criterion9();
  } else {
    std::printf("[SKIP] criterion  8: skipped (--quick)\n");
    std::printf("[SKIP] criterion  9: skipped (--quick)\n");
  }
  criterion10(out_root);
  criterion11();

  const double total = std::chrono::duration<double>(clk::now() - t0).count();
  std::printf("%d criterion failure(s); total %.1f min\n", g_failures, total / 60.0);
  return g_failures;
}
