// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/dfs.hpp"

#include <stdexcept>

namespace casdyf {

BranchStrategy branch_strategy_from_string(const std::string& s) {
  if (s == "dynamic") return BranchStrategy::dynamic;
  if (s == "fixed-conv") return BranchStrategy::fixed_conv;
  if (s == "resolution") return BranchStrategy::resolution;
  if (s == "split") return BranchStrategy::split;
  throw std::invalid_argument("unknown branch strategy '" + s +
                              "' (dynamic|fixed-conv|resolution|split)");
}

std::string to_string(BranchStrategy s) {
  switch (s) {
    case BranchStrategy::dynamic: return "dynamic";
    case BranchStrategy::fixed_conv: return "fixed-conv";
    case BranchStrategy::resolution: return "resolution";
    case BranchStrategy::split: return "split";
  }
  return "?";
}

void CascadeConfig::validate() const {
  if (branches < 1) shape_error("cascade: branches must be >= 1");
  if (channels % branches != 0)
    shape_error("cascade: channels " + std::to_string(channels) +
                " not divisible by branches " + std::to_string(branches));
  if (kernel < 1 || kernel % 2 == 0) shape_error("cascade: kernel must be odd");
}

template <typename T>
DynamicFilterUnit<T> DynamicFilterUnit<T>::make(ParamStore<T>& store,
                                                const std::string& prefix, index_t channels,
                                                int kernel) {
  DynamicFilterUnit<T> u;
  u.kernel = kernel;
  u.channels = channels;
  const index_t logits = channels * kernel * kernel;
  u.gen_weight = store.add_param(prefix + ".gen.weight", Shape{logits, channels, 1, 1},
                                 Init::kaiming_uniform, channels);
  u.bn = BnParams<T>::make(store, prefix + ".gen.bn", logits);
  return u;
}

template <typename T>
ad::Value<T> DynamicFilterUnit<T>::generate_kernel(const ad::Value<T>& x, Mode mode) const {
  if (x.shape().c != channels)
    shape_error("generate_kernel: expected " + std::to_string(channels) +
                " channels, got input " + x.shape().str());
  ad::Value<T> pooled = ad::global_avg_pool(x);
  ops::Conv2dSpec spec;
  spec.pad = 0;
  ad::Value<T> logits = ad::conv2d(pooled, gen_weight, std::nullopt, spec);
  logits = bn.forward(logits, mode);
  ad::Value<T> taps = ad::softmax_groups(logits, static_cast<index_t>(kernel) * kernel);
  return ad::reshape(taps, Shape{x.shape().n, channels, kernel, kernel});
}

template <typename T>
DfsLevel<T> DfsLevel<T>::make(ParamStore<T>& store, const std::string& prefix,
                              index_t channels, index_t branch_width, int kernel,
                              BranchStrategy strategy) {
  DfsLevel<T> lvl;
  lvl.strategy = strategy;
  lvl.channels = channels;
  if (strategy == BranchStrategy::dynamic) {
    lvl.unit = DynamicFilterUnit<T>::make(store, prefix + ".dfu", channels, kernel);
  } else {
    typename ConvBlock<T>::Opts o;
    o.kernel = kernel;
    o.groups = static_cast<int>(channels);
    o.with_bias = false;
    lvl.fixed_filter = ConvBlock<T>::make(store, prefix + ".fixed", channels, channels, o);
  }
  lvl.bn_y = BnParams<T>::make(store, prefix + ".bn_y", channels);
  typename ConvBlock<T>::Opts proj;
  proj.kernel = 1;
  lvl.out_proj = ConvBlock<T>::make(store, prefix + ".out", channels, branch_width, proj);
  lvl.next_proj =
      ConvBlock<T>::make(store, prefix + ".next", channels, channels - branch_width, proj);
  return lvl;
}

template <typename T>
std::pair<ad::Value<T>, ad::Value<T>> DfsLevel<T>::split(const ad::Value<T>& x,
                                                         Mode mode) const {
  ad::Value<T> y;
  if (strategy == BranchStrategy::dynamic) {
    ad::Value<T> kernel = unit.generate_kernel(x, mode);
    y = ad::dynamic_filter(x, kernel);
  } else {
    y = fixed_filter.forward(x, mode);
  }
  ad::Value<T> branch = out_proj.forward(ad::relu(bn_y.forward(y, mode)), mode);
  ad::Value<T> next = next_proj.forward(ad::sub(x, y), mode);
  return {branch, next};
}

template <typename T>
Cascade<T> Cascade<T>::make(ParamStore<T>& store, const std::string& prefix,
                            const CascadeConfig& config) {
  config.validate();
  Cascade<T> c;
  c.config = config;
  if (config.strategy == BranchStrategy::dynamic ||
      config.strategy == BranchStrategy::fixed_conv) {
    for (index_t i = 1; i < config.branches; ++i) {
      c.levels.push_back(DfsLevel<T>::make(store, prefix + ".level" + std::to_string(i),
                                           config.level_channels(i), config.branch_width(),
                                           config.kernel, config.strategy));
    }
  }
  return c;
}

template <typename T>
std::vector<ad::Value<T>> Cascade<T>::forward(const ad::Value<T>& x, Mode mode) const {
  if (x.shape().c != config.channels)
    shape_error("cascade: expected " + std::to_string(config.channels) +
                " channels, got " + x.shape().str());
  std::vector<ad::Value<T>> branches;
  branches.reserve(static_cast<std::size_t>(config.branches));
  if (config.strategy == BranchStrategy::split) {
    const index_t bw = config.branch_width();
    for (index_t i = 0; i < config.branches; ++i)
      branches.push_back(ad::slice(x, i * bw, (i + 1) * bw));
    return branches;
  }
  // dynamic / fixed_conv cascade of n-1 splits
  ad::Value<T> cur = x;
  for (const auto& lvl : levels) {
    auto [branch, next] = lvl.split(cur, mode);
    branches.push_back(branch);
    cur = next;
  }
  branches.push_back(cur);  // the final complement is the last branch verbatim
  return branches;
}

template struct DynamicFilterUnit<float>;
template struct DynamicFilterUnit<double>;
template struct DfsLevel<float>;
template struct DfsLevel<double>;
template struct Cascade<float>;
template struct Cascade<double>;

}  // namespace casdyf
