// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/fusion.hpp"

#include <algorithm>

namespace casdyf {

std::array<index_t, 3> local_fusion_triple(index_t i, index_t n) {
  if (i < 1 || i > n)
    shape_error("local fusion: branch index " + std::to_string(i) + " out of 1.." +
                std::to_string(n));
  std::array<index_t, 3> t{};
  if (i == 1)
    t = {i, i + 1, i + 2};
  else if (i == n)
    t = {n - 2, n - 1, n};
  else
    t = {i - 1, i, i + 1};
  for (auto& v : t) v = std::clamp<index_t>(v, 1, n);
  return t;
}

template <typename T>
LocalFusion<T> LocalFusion<T>::make(ParamStore<T>& store, const std::string& prefix,
                                    index_t branch_width) {
  LocalFusion<T> lf;
  lf.branch_width = branch_width;
  const index_t cat = 3 * branch_width;
  const index_t hidden = std::max<index_t>(1, cat / 4);
  lf.gate = GateMlp<T>::make(store, prefix + ".gate", cat, hidden, cat);
  typename ConvBlock<T>::Opts m;
  m.kernel = 1;
  lf.merge = ConvBlock<T>::make(store, prefix + ".merge", cat, branch_width, m);
  return lf;
}

template <typename T>
ad::Value<T> LocalFusion<T>::forward(const std::vector<ad::Value<T>>& branches, index_t i,
                                     Mode mode) const {
  const index_t n = static_cast<index_t>(branches.size());
  const auto triple = local_fusion_triple(i, n);
  std::vector<ad::Value<T>> parts;
  parts.reserve(3);
  for (index_t idx : triple) parts.push_back(branches[static_cast<std::size_t>(idx - 1)]);
  ad::Value<T> cat = ad::concat(parts);
  ad::Value<T> gates = ad::sigmoid(gate.forward(ad::global_avg_pool(cat), mode));
  ad::Value<T> fused = merge.forward(ad::mul(cat, gates), mode);
  return ad::add(branches[static_cast<std::size_t>(i - 1)], fused);
}

template <typename T>
GlobalFusion<T> GlobalFusion<T>::make(ParamStore<T>& store, const std::string& prefix,
                                      index_t channels) {
  GlobalFusion<T> gf;
  gf.channels = channels;
  typename ConvBlock<T>::Opts one;
  one.kernel = 1;
  gf.entry = ConvBlock<T>::make(store, prefix + ".entry", channels, channels, one);
  gf.channel_mlp = GateMlp<T>::make(store, prefix + ".ca", channels,
                                    std::max<index_t>(1, channels / 4), channels);
  typename ConvBlock<T>::Opts seven;
  seven.kernel = 7;
  gf.spatial = ConvBlock<T>::make(store, prefix + ".sa", 1, 1, seven);
  gf.pixel = ConvBlock<T>::make(store, prefix + ".pa", channels, channels, one);
  gf.exit = ConvBlock<T>::make(store, prefix + ".exit", channels, channels, one);
  return gf;
}

template <typename T>
ad::Value<T> GlobalFusion<T>::forward(const std::vector<ad::Value<T>>& branches,
                                      Mode mode) const {
  ad::Value<T> cat = ad::concat(branches);
  if (cat.shape().c != channels)
    shape_error("global fusion: expected " + std::to_string(channels) + " channels, got " +
                cat.shape().str());
  ad::Value<T> e = entry.forward(cat, mode);
  ad::Value<T> ca_gates =
      ad::sigmoid(channel_mlp.forward(ad::global_avg_pool(e), mode));        // (N,C,1,1)
  ad::Value<T> sa_gates =
      ad::sigmoid(spatial.forward(ad::channel_mean(e), mode));               // (N,1,H,W)
  ad::Value<T> pa_gates = ad::sigmoid(pixel.forward(e, mode));               // (N,C,H,W)
  ad::Value<T> summed =
      ad::add(ad::add(ad::mul(e, ca_gates), ad::mul(e, sa_gates)), ad::mul(e, pa_gates));
  return ad::add(cat, exit.forward(summed, mode));
}

template struct LocalFusion<float>;
template struct LocalFusion<double>;
template struct GlobalFusion<float>;
template struct GlobalFusion<double>;

}  // namespace casdyf
