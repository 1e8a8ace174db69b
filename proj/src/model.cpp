// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/model.hpp"

#include <json.hpp>

namespace casdyf {

void ModelConfig::validate() const {
  if (base_channels < 1) shape_error("config: base_channels must be >= 1");
  if (branches < 1) shape_error("config: branches must be >= 1");
  for (index_t w : {base_channels, 2 * base_channels, 4 * base_channels})
    if (w % branches != 0)
      shape_error("config: stage width " + std::to_string(w) +
                  " not divisible by branches " + std::to_string(branches));
  for (index_t b : blocks)
    if (b < 0) shape_error("config: block depths must be >= 0");
  if (rmb_per_branch < 0) shape_error("config: rmb_per_branch must be >= 0");
  if (kernel < 1 || kernel % 2 == 0) shape_error("config: kernel must be odd");
  for (int d : dilations)
    if (d < 1) shape_error("config: dilations must be >= 1");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["base_channels"] = base_channels;
  j["branches"] = branches;
  j["blocks"] = blocks;
  j["rmb_per_branch"] = rmb_per_branch;
  j["dilations"] = dilations;
  j["kernel"] = kernel;
  j["strategy"] = to_string(strategy);
  j["refine"] = to_string(refine);
  j["rmb_on_last_branch"] = rmb_on_last_branch;
  j["rmb_parallel_taps"] = rmb_parallel_taps;
  j["global_residual"] = global_residual;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  if (j.contains("base_channels")) c.base_channels = j["base_channels"].get<index_t>();
  if (j.contains("branches")) c.branches = j["branches"].get<index_t>();
  if (j.contains("blocks")) c.blocks = j["blocks"].get<std::array<index_t, 5>>();
  if (j.contains("rmb_per_branch")) c.rmb_per_branch = j["rmb_per_branch"].get<index_t>();
  if (j.contains("dilations")) c.dilations = j["dilations"].get<std::array<int, 3>>();
  if (j.contains("kernel")) c.kernel = j["kernel"].get<int>();
  if (j.contains("strategy"))
    c.strategy = branch_strategy_from_string(j["strategy"].get<std::string>());
  if (j.contains("refine")) c.refine = refine_kind_from_string(j["refine"].get<std::string>());
  if (j.contains("rmb_on_last_branch")) c.rmb_on_last_branch = j["rmb_on_last_branch"].get<bool>();
  if (j.contains("rmb_parallel_taps")) c.rmb_parallel_taps = j["rmb_parallel_taps"].get<bool>();
  if (j.contains("global_residual")) c.global_residual = j["global_residual"].get<bool>();
  c.validate();
  return c;
}

// ---- CasDyFBlock ------------------------------------------------------------

template <typename T>
CasDyFBlock<T> CasDyFBlock<T>::make(ParamStore<T>& store, const std::string& prefix,
                                    index_t channels, const ModelConfig& cfg) {
  CasDyFBlock<T> blk;
  blk.cfg = cfg;
  blk.channels = channels;
  CascadeConfig cc;
  cc.channels = channels;
  cc.branches = cfg.branches;
  cc.kernel = cfg.kernel;
  cc.strategy = cfg.strategy;
  blk.cascade = Cascade<T>::make(store, prefix + ".cascade", cc);
  const index_t bw = cc.branch_width();
  if (cfg.strategy == BranchStrategy::resolution) {
    typename ConvBlock<T>::Opts one;
    one.kernel = 1;
    for (index_t i = 0; i < cfg.branches; ++i)
      blk.res_proj.push_back(ConvBlock<T>::make(
          store, prefix + ".res" + std::to_string(i), channels, bw, one));
  }
  for (index_t i = 0; i < cfg.branches; ++i) {
    const bool last = i == cfg.branches - 1;
    const bool refine_this = !last || cfg.rmb_on_last_branch;
    blk.refine.push_back(RefineStack<T>::make(
        store, prefix + ".refine" + std::to_string(i), bw,
        refine_this ? cfg.refine : RefineKind::none, cfg.rmb_per_branch, cfg.dilations,
        cfg.rmb_parallel_taps));
  }
  for (index_t i = 0; i < cfg.branches; ++i)
    blk.local.push_back(
        LocalFusion<T>::make(store, prefix + ".lfb" + std::to_string(i), bw));
  blk.global = GlobalFusion<T>::make(store, prefix + ".gfb", channels);
  return blk;
}

template <typename T>
std::vector<ad::Value<T>> CasDyFBlock<T>::make_branches(const ad::Value<T>& x,
                                                        Mode mode) const {
  if (cfg.strategy != BranchStrategy::resolution) return cascade.forward(x, mode);
  // resolution pyramid: branch i lives at scale 1/2^i, is reduced by a
  // 1x1 conv and brought back to full resolution
  std::vector<ad::Value<T>> branches;
  ad::Value<T> cur = x;
  for (index_t i = 0; i < cfg.branches; ++i) {
    ad::Value<T> b = res_proj[static_cast<std::size_t>(i)].forward(cur, mode);
    for (index_t s = 0; s < i; ++s) b = ad::resize_double(b);
    branches.push_back(b);
    if (i + 1 < cfg.branches) cur = ad::resize_half(cur);
  }
  return branches;
}

template <typename T>
ad::Value<T> CasDyFBlock<T>::forward(const ad::Value<T>& x, Mode mode) const {
  std::vector<ad::Value<T>> branches = make_branches(x, mode);
  for (std::size_t i = 0; i < branches.size(); ++i)
    branches[i] = refine[i].forward(branches[i], mode);
  std::vector<ad::Value<T>> fused;
  fused.reserve(branches.size());
  for (index_t i = 1; i <= static_cast<index_t>(branches.size()); ++i)
    fused.push_back(local[static_cast<std::size_t>(i - 1)].forward(branches, i, mode));
  ad::Value<T> out = global.forward(fused, mode);
  return ad::add(x, out);
}

// ---- Model ---------------------------------------------------------------------

namespace {

template <typename T>
std::vector<CasDyFBlock<T>> make_stage(ParamStore<T>& store, const std::string& prefix,
                                       index_t channels, index_t depth,
                                       const ModelConfig& cfg) {
  std::vector<CasDyFBlock<T>> blocks;
  for (index_t i = 0; i < depth; ++i)
    blocks.push_back(
        CasDyFBlock<T>::make(store, prefix + ".block" + std::to_string(i), channels, cfg));
  return blocks;
}

template <typename T>
ad::Value<T> run_stage(const std::vector<CasDyFBlock<T>>& stage, ad::Value<T> x, Mode mode,
                       const ad::Value<T>* inject_after_first = nullptr) {
  if (stage.empty() && inject_after_first)
    return ad::add(x, *inject_after_first);
  for (std::size_t i = 0; i < stage.size(); ++i) {
    x = stage[i].forward(x, mode);
    if (i == 0 && inject_after_first) x = ad::add(x, *inject_after_first);
  }
  return x;
}

}  // namespace

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const index_t c1 = cfg.base_channels, c2 = 2 * c1, c4 = 4 * c1;
  stem_ = ConvBlock<T>::make(store_, "stem", 3, c1, {});
  enc1_ = make_stage(store_, "enc1", c1, cfg.blocks[0], cfg);
  down1_ = Downsample<T>::make(store_, "down1", c1, c2);
  inject_half_ = ConvBlock<T>::make(store_, "inject_half", 3, c2, {});
  enc2_ = make_stage(store_, "enc2", c2, cfg.blocks[1], cfg);
  down2_ = Downsample<T>::make(store_, "down2", c2, c4);
  inject_quarter_ = ConvBlock<T>::make(store_, "inject_quarter", 3, c4, {});
  bottleneck_ = make_stage(store_, "bottleneck", c4, cfg.blocks[2], cfg);
  up1_ = Upsample<T>::make(store_, "up1", c4, c2);
  dec2_ = make_stage(store_, "dec2", c2, cfg.blocks[3], cfg);
  up2_ = Upsample<T>::make(store_, "up2", c2, c1);
  dec1_ = make_stage(store_, "dec1", c1, cfg.blocks[4], cfg);
  head_quarter_ = ConvBlock<T>::make(store_, "head_quarter", c4, 3, {});
  head_half_ = ConvBlock<T>::make(store_, "head_half", c2, 3, {});
  head_full_ = ConvBlock<T>::make(store_, "head_full", c1, 3, {});
  store_.init_params(seed);
}

template <typename T>
typename Model<T>::Outputs Model<T>::forward(const ad::Value<T>& hazy, Mode mode) const {
  const Shape& s = hazy.shape();
  if (s.c != 3) shape_error("model: expected 3-channel input, got " + s.str());
  if (s.h % 4 != 0 || s.w % 4 != 0)
    shape_error("model: H and W must be divisible by 4 (pad the input), got " + s.str());

  ad::Value<T> half_in = ad::resize_half(hazy);
  ad::Value<T> quarter_in = ad::resize_half(half_in);

  ad::Value<T> x = stem_.forward(hazy, mode);
  ad::Value<T> e1 = run_stage(enc1_, x, mode);
  ad::Value<T> x2 = down1_.forward(e1, mode);
  ad::Value<T> inj2 = inject_half_.forward(half_in, mode);
  ad::Value<T> e2 = run_stage(enc2_, x2, mode, &inj2);
  ad::Value<T> x3 = down2_.forward(e2, mode);
  ad::Value<T> inj3 = inject_quarter_.forward(quarter_in, mode);
  ad::Value<T> b = run_stage(bottleneck_, x3, mode, &inj3);

  ad::Value<T> d2 = ad::add(up1_.forward(b, mode), e2);  // encoder-2 skip
  d2 = run_stage(dec2_, d2, mode);
  ad::Value<T> d1 = ad::add(up2_.forward(d2, mode), e1);  // encoder-1 skip
  d1 = run_stage(dec1_, d1, mode);

  Outputs out;
  out.quarter = head_quarter_.forward(b, mode);
  out.half = head_half_.forward(d2, mode);
  out.full = head_full_.forward(d1, mode);
  if (cfg_.global_residual) {
    out.quarter = ad::add(out.quarter, quarter_in);
    out.half = ad::add(out.half, half_in);
    out.full = ad::add(out.full, hazy);
  }
  return out;
}

template <typename T>
typename Model<T>::Outputs Model<T>::forward(const Tensor<T>& hazy, Mode mode) const {
  return forward(ad::leaf(hazy, false), mode);
}

template <typename T>
Tensor<T> Model<T>::infer(const Tensor<T>& hazy) const {
  return forward(hazy, Mode::eval).full.val();
}

template struct CasDyFBlock<float>;
template struct CasDyFBlock<double>;
template class Model<float>;
template class Model<double>;

}  // namespace casdyf
