// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Spectrum identities of dilated kernels, ERF map contracts, and the
// exact agreement between closed-form cost accounting and the
// instrumented forward pass.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "casdyf/analysis.hpp"
#include "test_util.hpp"

using namespace casdyf;
using testutil::random_tensor;

TEST_CASE("averaging kernel peaks at DC; Laplacian has an exactly zero DC bin") {
  auto avg = kernel_spectrum(base_kernel("avg3"), 3, 1, 32);
  double mx = 0.0;
  for (double v : avg.magnitude) mx = std::max(mx, v);
  CHECK(avg.magnitude[0] == doctest::Approx(mx));
  CHECK(avg.magnitude[0] == doctest::Approx(1.0).epsilon(1e-12));  // taps sum to 1

  auto lap = kernel_spectrum(base_kernel("laplacian"), 3, 1, 32);
  CHECK(std::abs(lap.magnitude[0]) < 1e-12);  // taps sum to 0
}

TEST_CASE("dilation replication identity: (u,v) -> (d*u mod N, d*v mod N)") {
  const int N = 64;
  for (const char* tag : {"avg3", "laplacian"}) {
    auto base = kernel_spectrum(base_kernel(tag), 3, 1, N);
    for (int d : {2, 3, 5}) {
      auto dil = kernel_spectrum(base_kernel(tag), 3, d, N);
      double worst = 0.0;
      for (int u = 0; u < N; ++u)
        for (int v = 0; v < N; ++v) {
          const double got = dil.magnitude[static_cast<std::size_t>(u * N + v)];
          const double want =
              base.magnitude[static_cast<std::size_t>(((d * u) % N) * N + (d * v) % N)];
          worst = std::max(worst, std::abs(got - want));
        }
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("serial composite of a kernel with itself squares the magnitude") {
  auto single = kernel_spectrum(base_kernel("avg3"), 3, 1, 16);
  auto serial = composite_spectrum(base_kernel("avg3"), 3, {1, 1}, SpectrumMode::serial, 16);
  for (std::size_t i = 0; i < single.magnitude.size(); ++i)
    CHECK(serial.magnitude[i] ==
          doctest::Approx(single.magnitude[i] * single.magnitude[i]).epsilon(1e-9));
}

TEST_CASE("parallel composite of a kernel with itself doubles the magnitude") {
  auto single = kernel_spectrum(base_kernel("avg3"), 3, 1, 16);
  auto par = composite_spectrum(base_kernel("avg3"), 3, {1, 1}, SpectrumMode::parallel, 16);
  for (std::size_t i = 0; i < single.magnitude.size(); ++i)
    CHECK(par.magnitude[i] == doctest::Approx(2.0 * single.magnitude[i]).epsilon(1e-9));
}

TEST_CASE("tap-merged {1,3,5} composite has strictly more distinct levels than any component") {
  const int N = 64;
  auto comp = composite_spectrum(base_kernel("avg3"), 3, {1, 3, 5}, SpectrumMode::taps, N);
  const index_t comp_levels = distinct_levels(comp.magnitude);
  for (int d : {1, 3, 5}) {
    auto single = kernel_spectrum(base_kernel("avg3"), 3, d, N);
    CHECK(comp_levels > distinct_levels(single.magnitude));
  }
}

TEST_CASE("plain product composite preserves the level count (separability)") {
  // the product of separable symmetric spectra stays separable; its
  // distinct-magnitude count is pinned by the grid symmetry and ties
  // with every single component
  const int N = 64;
  auto comp =
      composite_spectrum(base_kernel("avg3"), 3, {1, 3, 5}, SpectrumMode::serial, N);
  auto single = kernel_spectrum(base_kernel("avg3"), 3, 1, N);
  CHECK(distinct_levels(comp.magnitude) == distinct_levels(single.magnitude));
}

TEST_CASE("composite rejects an empty dilation list; footprint must fit the grid") {
  CHECK_THROWS_AS(composite_spectrum(base_kernel("avg3"), 3, {}, SpectrumMode::serial, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(kernel_spectrum(base_kernel("avg3"), 3, 16, 16), std::invalid_argument);
}

TEST_CASE("spectrum CSV has the declared header and recenters DC") {
  namespace fs = std::filesystem;
  auto rep = kernel_spectrum(base_kernel("avg3"), 3, 1, 8);
  const std::string path = (fs::temp_directory_path() / "spec_test.csv").string();
  write_spectrum_csv(path, rep);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "# N=8 mode=single");
  // DC (=1 for avg3) ends up at row 4, column 4
  std::string line;
  for (int r = 0; r <= 4; ++r) std::getline(is, line);
  std::stringstream ss(line);
  std::string cell;
  for (int c = 0; c <= 4; ++c) std::getline(ss, cell, ',');
  CHECK(std::stod(cell) == doctest::Approx(1.0).epsilon(1e-9));
  fs::remove(path);
}

namespace {

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.base_channels = 8;
  cfg.branches = 4;
  cfg.blocks = {1, 1, 1, 1, 1};
  cfg.rmb_per_branch = 1;
  return cfg;
}

}  // namespace

TEST_CASE("zero-weight model with global residual has a single-pixel ERF") {
  Model<float> model(micro_config(), 3);
  model.store().zero_learned();
  Tensor<float> input({1, 3, 32, 32}, 0.5f);
  auto map = erf_map(model, input, 0, 16, 16);
  CHECK(map.shape == Shape{1, 1, 32, 32});
  index_t nonzero = 0;
  for (float v : map.data)
    if (v != 0.0f) ++nonzero;
  CHECK(nonzero == 1);
  CHECK(map.at(0, 0, 16, 16) > 0.0f);
  CHECK(effective_radius(map, 16, 16) == 0.0);
}

TEST_CASE("erf maps normalize to [0,255] with max 255 and are reproducible") {
  Model<float> model(micro_config(), 4);
  Rng rng(81);
  auto input = random_tensor<float>({1, 3, 32, 32}, rng, 0, 1);
  auto m1 = erf_map_average(model, input, 3, 17);
  auto m2 = erf_map_average(model, input, 3, 17);
  CHECK(m1.data == m2.data);
  auto norm = normalize_erf(m1);
  float mx = 0.0f;
  for (float v : norm.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 255.0f);
    mx = std::max(mx, v);
  }
  CHECK(mx == 255.0f);
}

TEST_CASE("erf rejects out-of-bounds output pixels") {
  Model<float> model(micro_config(), 5);
  Tensor<float> input({1, 3, 32, 32}, 0.5f);
  CHECK_THROWS_AS(erf_map(model, input, 0, 32, 0), std::invalid_argument);
  CHECK_THROWS_AS(erf_map(model, input, 3, 0, 0), std::invalid_argument);
}

TEST_CASE("closed-form parameter count matches the student store exactly") {
  for (BranchStrategy s : {BranchStrategy::dynamic, BranchStrategy::split,
                           BranchStrategy::fixed_conv, BranchStrategy::resolution}) {
    ModelConfig cfg = micro_config();
    cfg.strategy = s;
    Model<float> model(cfg, 6);
    CostReport report = count_params_flops(cfg, 32, 32);
    CHECK(report.total_params == model.store().learned_scalar_count());
  }
}

TEST_CASE("closed-form MACs equal the instrumented forward pass exactly") {
  SUBCASE("micro config") {
    ModelConfig cfg = micro_config();
    Model<float> model(cfg, 7);
    CostReport report = count_params_flops(cfg, 32, 32);
    CHECK(report.total_macs == measure_forward_macs(model, 32, 32));
    CHECK(report.total_flops() == 2 * report.total_macs);
  }
  SUBCASE("batch 2") {
    ModelConfig cfg = micro_config();
    Model<float> model(cfg, 8);
    CostReport report = count_params_flops(cfg, 32, 32, 2);
    CHECK(report.total_macs == measure_forward_macs(model, 32, 32, 2));
  }
}

TEST_CASE("cost totals equal the sum of the itemization; depth scaling is monotone") {
  ModelConfig cfg = micro_config();
  CostReport report = count_params_flops(cfg, 32, 32);
  index_t psum = 0;
  std::uint64_t msum = 0;
  for (const auto& it : report.items) {
    psum += it.params;
    msum += it.macs;
  }
  CHECK(psum == report.total_params);
  CHECK(msum == report.total_macs);

  ModelConfig deeper = cfg;
  deeper.blocks = {2, 2, 2, 2, 2};
  CostReport r2 = count_params_flops(deeper, 32, 32);
  CHECK(r2.total_params > report.total_params);
  CHECK(r2.total_macs > report.total_macs);
}

TEST_CASE("single 3x3 conv cost fixture: params 9248, MACs 37748736") {
  // 32->32 channels, bias, on a 64x64 output
  // params = 32*32*9 + 32 = 9248; MACs = 32*32*9*64*64 = 37,748,736
  CHECK(32 * 32 * 9 + 32 == 9248);
  ModelConfig cfg;  // only used to reach the conv rule through a known item
  (void)cfg;
  const std::uint64_t macs = 37748736ULL;
  CHECK(static_cast<std::uint64_t>(32) * 32 * 9 * 64 * 64 == macs);
  // runtime meter agrees on the same conv
  Tensor<float> x({1, 32, 64, 64}, 0.1f);
  Tensor<float> w({32, 32, 3, 3}, 0.01f);
  Tensor<float> b({1, 32, 1, 1}, 0.0f);
  ops::Conv2dSpec spec;
  spec.pad = 1;
  ops::MacMeter::enable();
  ops::conv2d(x, w, &b, spec);
  CHECK(ops::MacMeter::disable() == macs);
}

TEST_CASE("closed-form MACs match the meter for every branch strategy") {
  for (BranchStrategy s : {BranchStrategy::dynamic, BranchStrategy::split,
                           BranchStrategy::fixed_conv, BranchStrategy::resolution}) {
    ModelConfig cfg = micro_config();
    cfg.strategy = s;
    Model<float> model(cfg, 11);
    CostReport report = count_params_flops(cfg, 32, 32);
    INFO("strategy ", to_string(s));
    CHECK(report.total_macs == measure_forward_macs(model, 32, 32));
  }
}
