// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Full network: output shapes at three scales, stacked residual
// identities at zero weights, eval determinism, low-resolution input
// sensitivity, and checkpoint round trips including cross-dtype loads.

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "casdyf/checkpoint.hpp"
#include "test_util.hpp"

using namespace casdyf;
namespace ad = casdyf::ad;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.base_channels = 8;
  cfg.branches = 4;
  cfg.blocks = {1, 1, 1, 1, 1};
  cfg.rmb_per_branch = 1;
  return cfg;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("output shapes at the three scales") {
  Model<float> model(micro_config(), 1);
  Rng rng(51);
  auto hazy = random_tensor<float>({1, 3, 64, 64}, rng, 0, 1);
  auto out = model.forward(hazy, Mode::eval);
  CHECK(out.full.shape() == Shape{1, 3, 64, 64});
  CHECK(out.half.shape() == Shape{1, 3, 32, 32});
  CHECK(out.quarter.shape() == Shape{1, 3, 16, 16});
}

TEST_CASE("block: shape preservation and zero-weight identity") {
  ParamStore<float> store;
  ModelConfig cfg = micro_config();
  auto block = CasDyFBlock<float>::make(store, "blk", 8, cfg);
  store.init_params(2);
  Rng rng(52);
  auto x = random_tensor<float>({1, 8, 16, 16}, rng);
  auto y = block.forward(ad::leaf(x, false), Mode::eval);
  CHECK(y.shape() == x.shape);
  store.zero_learned();
  auto y0 = block.forward(ad::leaf(x, false), Mode::eval);
  CHECK(max_abs_diff(x, y0.val()) == 0.0);
}

TEST_CASE("zero-weight model with global residual reproduces the resized inputs") {
  Model<float> model(micro_config(), 3);
  model.store().zero_learned();
  Rng rng(53);
  auto hazy = random_tensor<float>({1, 3, 32, 32}, rng, 0, 1);
  auto out = model.forward(hazy, Mode::eval);
  CHECK(max_abs_diff(out.full.val(), hazy) == 0.0);
  CHECK(max_abs_diff(out.half.val(), ops::resize_half(hazy)) == 0.0);
  CHECK(max_abs_diff(out.quarter.val(), ops::resize_half(ops::resize_half(hazy))) == 0.0);
}

TEST_CASE("eval forward is deterministic") {
  Model<float> model(micro_config(), 4);
  Rng rng(54);
  auto hazy = random_tensor<float>({2, 3, 32, 32}, rng, 0, 1);
  auto a = model.forward(hazy, Mode::eval);
  auto b = model.forward(hazy, Mode::eval);
  CHECK(max_abs_diff(a.full.val(), b.full.val()) == 0.0);
  CHECK(max_abs_diff(a.half.val(), b.half.val()) == 0.0);
  CHECK(max_abs_diff(a.quarter.val(), b.quarter.val()) == 0.0);
}

TEST_CASE("input dims not divisible by 4 are rejected with padding advice") {
  Model<float> model(micro_config(), 5);
  Tensor<float> bad({1, 3, 30, 32}, 0.5f);
  CHECK_THROWS_WITH_AS(model.forward(bad, Mode::eval), doctest::Contains("divisible by 4"),
                       std::invalid_argument);
}

TEST_CASE("zeroing the half-scale injection changes the half output") {
  Model<float> model(micro_config(), 6);
  Rng rng(55);
  auto hazy = random_tensor<float>({1, 3, 32, 32}, rng, 0, 1);
  auto base = model.forward(hazy, Mode::eval);
  model.store().get("inject_half.weight").val().fill(0.0f);
  model.store().get("inject_half.bias").val().fill(0.0f);
  auto cut = model.forward(hazy, Mode::eval);
  CHECK(max_abs_diff(base.half.val(), cut.half.val()) > 1e-6);
}

TEST_CASE("same seed builds identical parameters; different seeds differ") {
  Model<float> a(micro_config(), 7), b(micro_config(), 7), c(micro_config(), 8);
  const auto& ea = a.store().entries();
  const auto& eb = b.store().entries();
  const auto& ec = c.store().entries();
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i].value.val().data != eb[i].value.val().data) all_same = false;
    if (ea[i].value.val().data != ec[i].value.val().data) any_diff = true;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("init bound: 3x3 conv weights stay within sqrt(6/fan_in)") {
  ParamStore<float> store;
  typename ConvBlock<float>::Opts o;
  auto blk = ConvBlock<float>::make(store, "c", 32, 16, o);  // fan_in = 32*9 = 288
  store.init_params(11);
  const double bound = std::sqrt(6.0 / 288.0);
  CHECK(bound == doctest::Approx(0.1443).epsilon(1e-3));
  for (float v : blk.weight.val().data) CHECK(std::abs(v) <= bound);
}

TEST_CASE("conv block parameter count matches the hand formula") {
  ParamStore<float> store;
  typename ConvBlock<float>::Opts o;
  o.with_bn = true;
  auto blk = ConvBlock<float>::make(store, "c", 8, 16, o);
  // Cout*Cin*k^2 + Cout (bias) + 2*Cout (norm)
  CHECK(blk.param_count() == 16 * 8 * 9 + 16 + 2 * 16);
  CHECK(store.learned_scalar_count() == blk.param_count());
}

TEST_CASE("checkpoint: save -> load -> save is byte-identical and outputs match") {
  Model<float> model(micro_config(), 9);
  const std::string p1 = temp_path("ck_a.cdyf");
  const std::string p2 = temp_path("ck_b.cdyf");
  write_checkpoint(p1, snapshot(model.config(), model.store()));
  Checkpoint ck = read_checkpoint(p1);
  Model<float> loaded(ck.config, 0);
  apply_to_store(ck, loaded.store());
  write_checkpoint(p2, snapshot(loaded.config(), loaded.store()));

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::vector<char> b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::vector<char> b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  Rng rng(56);
  auto hazy = random_tensor<float>({1, 3, 32, 32}, rng, 0, 1);
  CHECK(max_abs_diff(model.forward(hazy, Mode::eval).full.val(),
                     loaded.forward(hazy, Mode::eval).full.val()) == 0.0);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("checkpoint: corrupt magic and truncation are rejected with offsets") {
  Model<float> model(micro_config(), 10);
  const std::string p = temp_path("ck_corrupt.cdyf");
  write_checkpoint(p, snapshot(model.config(), model.store()));
  // corrupt magic
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_WITH_AS(read_checkpoint(p), doctest::Contains("magic"), std::runtime_error);
  // version mismatch
  write_checkpoint(p, snapshot(model.config(), model.store()));
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.write("0002", 4);
  }
  CHECK_THROWS_WITH_AS(read_checkpoint(p), doctest::Contains("version"), std::runtime_error);
  // truncation
  write_checkpoint(p, snapshot(model.config(), model.store()));
  {
    std::error_code ec;
    const auto size = std::filesystem::file_size(p, ec);
    std::filesystem::resize_file(p, size - 64, ec);
  }
  CHECK_THROWS_AS(read_checkpoint(p), std::runtime_error);
  std::remove(p.c_str());
}

TEST_CASE("cross-dtype load: f32 file into f64 run widens exactly") {
  ModelConfig cfg = micro_config();
  Model<float> m32(cfg, 12);
  const std::string p = temp_path("ck_f32.cdyf");
  write_checkpoint(p, snapshot(cfg, m32.store()));
  Checkpoint ck = read_checkpoint(p);
  Model<double> m64(ck.config, 0);
  apply_to_store(ck, m64.store());
  // parameters widen exactly
  const auto& e32 = m32.store().entries();
  const auto& e64 = m64.store().entries();
  for (std::size_t i = 0; i < e32.size(); ++i)
    for (std::size_t k = 0; k < e32[i].value.val().data.size(); ++k)
      CHECK(static_cast<double>(e32[i].value.val().data[k]) == e64[i].value.val().data[k]);
  // forward passes agree within f32 noise
  Rng rng(57);
  auto hazy64 = random_tensor<double>({1, 3, 32, 32}, rng, 0, 1);
  auto hazy32 = hazy64.cast<float>();
  auto out64 = m64.forward(hazy64, Mode::eval).full.val();
  auto out32 = m32.forward(hazy32, Mode::eval).full.val();
  double worst = 0.0;
  for (std::size_t i = 0; i < out64.data.size(); ++i)
    worst = std::max(worst, std::abs(out64.data[i] - static_cast<double>(out32.data[i])));
  CHECK(worst < 1e-5);
  std::remove(p.c_str());
}

TEST_CASE("config JSON round trip") {
  ModelConfig cfg = micro_config();
  cfg.strategy = BranchStrategy::split;
  cfg.refine = RefineKind::rdb;
  cfg.dilations = {1, 2, 3};
  ModelConfig back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.base_channels == cfg.base_channels);
  CHECK(back.branches == cfg.branches);
  CHECK(back.blocks == cfg.blocks);
  CHECK(back.strategy == cfg.strategy);
  CHECK(back.refine == cfg.refine);
  CHECK(back.dilations == cfg.dilations);
}

TEST_CASE("split strategy has strictly fewer parameters than dynamic") {
  ModelConfig dyn = micro_config();
  ModelConfig split = micro_config();
  split.strategy = BranchStrategy::split;
  Model<float> md(dyn, 1), ms(split, 1);
  CHECK(ms.store().learned_scalar_count() < md.store().learned_scalar_count());
}

TEST_CASE("resolution and fixed-conv strategies run and preserve shapes") {
  for (BranchStrategy s : {BranchStrategy::resolution, BranchStrategy::fixed_conv}) {
    ModelConfig cfg = micro_config();
    cfg.strategy = s;
    Model<float> model(cfg, 13);
    Rng rng(58);
    auto hazy = random_tensor<float>({1, 3, 32, 32}, rng, 0, 1);
    auto out = model.forward(hazy, Mode::eval);
    CHECK(out.full.shape() == Shape{1, 3, 32, 32});
  }
}

TEST_CASE("micro block gradient check at f64") {
  ParamStore<double> store;
  ModelConfig cfg = micro_config();
  auto block = CasDyFBlock<double>::make(store, "blk", 8, cfg);
  store.init_params(14);
  Rng rng(59);
  auto res = testutil::grad_check<double>(
      [&](auto& in) { return block.forward(in[0], Mode::eval); },
      {random_tensor<double>({1, 8, 8, 8}, rng)}, 1e-5);
  CHECK(res.max_rel < 1e-5);
}

TEST_CASE("upsample and downsample with identity-like kernels preserve constants") {
  // conv weights as a center-tap delta on the matching channel, zero bias
  ParamStore<float> store;
  auto up = Upsample<float>::make(store, "up", 4, 4);
  auto down = Downsample<float>::make(store, "down", 4, 4);
  store.init_params(1);
  store.zero_learned();
  for (index_t c = 0; c < 4; ++c) {
    up.conv.weight.val().at(c, c, 1, 1) = 1.0f;
    down.conv.weight.val().at(c, c, 1, 1) = 1.0f;
  }
  Tensor<float> x({1, 4, 8, 8}, 0.375f);
  auto upped = up.forward(ad::leaf(x, false), Mode::eval);
  CHECK(upped.shape() == Shape{1, 4, 16, 16});
  for (float v : upped.val().data) CHECK(v == doctest::Approx(0.375f).epsilon(1e-6));
  auto back = down.forward(upped, Mode::eval);
  CHECK(back.shape() == x.shape);
  for (float v : back.val().data) CHECK(v == doctest::Approx(0.375f).epsilon(1e-6));
}

TEST_CASE("downsample shape contract and odd-dimension rejection") {
  ParamStore<float> store;
  auto down = Downsample<float>::make(store, "d", 32, 64);
  store.init_params(2);
  Rng rng(61);
  auto x = random_tensor<float>({1, 32, 64, 64}, rng);
  CHECK(down.forward(ad::leaf(x, false), Mode::eval).shape() == Shape{1, 64, 32, 32});
  auto odd = random_tensor<float>({1, 32, 7, 8}, rng);
  CHECK_THROWS_AS(down.forward(ad::leaf(odd, false), Mode::eval), std::invalid_argument);
  // zero input: bias-only constant output per channel
  store.zero_learned();
  Tensor<float>& bias = store.get("d.conv.bias").val();
  for (index_t c = 0; c < 64; ++c) bias.data[static_cast<std::size_t>(c)] = 0.01f * c;
  Tensor<float> zero({1, 32, 8, 8}, 0.0f);
  auto out = down.forward(ad::leaf(zero, false), Mode::eval);
  for (index_t c = 0; c < 64; ++c)
    for (index_t i = 0; i < 16; ++i)
      CHECK(out.val().plane(0, c)[i] == doctest::Approx(0.01f * c));
}

TEST_CASE("loading into a mismatched model names the offending tensor") {
  ModelConfig small = micro_config();
  Model<float> m(small, 1);
  const std::string p = temp_path("ck_mismatch.cdyf");
  write_checkpoint(p, snapshot(small, m.store()));
  Checkpoint ck = read_checkpoint(p);
  ModelConfig bigger = small;
  bigger.base_channels = 16;  // same entry names, different shapes
  Model<float> target(bigger, 2);
  CHECK_THROWS_WITH_AS(apply_to_store(ck, target.store()), doctest::Contains("stem.weight"),
                       std::runtime_error);
  std::remove(p.c_str());
}
