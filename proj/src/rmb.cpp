// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/rmb.hpp"

#include <cstdio>
#include <stdexcept>

namespace casdyf {

RefineKind refine_kind_from_string(const std::string& s) {
  if (s == "rmb") return RefineKind::rmb;
  if (s == "rb") return RefineKind::rb;
  if (s == "rdb") return RefineKind::rdb;
  if (s == "none") return RefineKind::none;
  throw std::invalid_argument("unknown refine block '" + s + "' (rmb|rb|rdb|none)");
}

std::string to_string(RefineKind k) {
  switch (k) {
    case RefineKind::rmb: return "rmb";
    case RefineKind::rb: return "rb";
    case RefineKind::rdb: return "rdb";
    case RefineKind::none: return "none";
  }
  return "?";
}

template <typename T>
Rmb<T> Rmb<T>::make(ParamStore<T>& store, const std::string& prefix, index_t channels,
                    const std::array<int, 3>& dilations, bool parallel_taps) {
  Rmb<T> b;
  b.parallel_taps = parallel_taps;
  for (int i = 0; i < 3; ++i) {
    typename ConvBlock<T>::Opts o;
    o.dilation = dilations[static_cast<std::size_t>(i)];
    b.convs[static_cast<std::size_t>(i)] =
        ConvBlock<T>::make(store, prefix + ".d" + std::to_string(i), channels, channels, o);
  }
  typename ConvBlock<T>::Opts m;
  m.kernel = 1;
  b.merge1 = ConvBlock<T>::make(store, prefix + ".merge1", 3 * channels, channels, m);
  b.merge2 = ConvBlock<T>::make(store, prefix + ".merge2", channels, channels, m);
  return b;
}

template <typename T>
ad::Value<T> Rmb<T>::forward(const ad::Value<T>& x, Mode mode) const {
  const int span = 2 * (convs[0].spec.dilation + convs[1].spec.dilation +
                        convs[2].spec.dilation);
  if (x.shape().h <= span || x.shape().w <= span) {
    static thread_local bool warned = false;
    if (!warned) {
      warned = true;
      std::fprintf(stderr,
                   "rmb: input %lldx%lld is at or below the recommended minimum %dx%d "
                   "for these dilation rates\n",
                   static_cast<long long>(x.shape().h),
                   static_cast<long long>(x.shape().w), span + 1, span + 1);
    }
  }
  ad::Value<T> y1 = convs[0].forward(x, mode);
  ad::Value<T> y2 = convs[1].forward(parallel_taps ? x : ad::relu(y1), mode);
  ad::Value<T> y3 = convs[2].forward(parallel_taps ? x : ad::relu(y2), mode);
  ad::Value<T> merged = ad::concat<T>({y1, y2, y3});
  merged = merge2.forward(ad::relu(merge1.forward(merged, mode)), mode);
  return ad::add(x, merged);
}

template <typename T>
ResidualBlock<T> ResidualBlock<T>::make(ParamStore<T>& store, const std::string& prefix,
                                        index_t channels) {
  ResidualBlock<T> b;
  typename ConvBlock<T>::Opts o;
  o.act = Act::relu;
  b.c1 = ConvBlock<T>::make(store, prefix + ".c1", channels, channels, o);
  o.act = Act::none;
  b.c2 = ConvBlock<T>::make(store, prefix + ".c2", channels, channels, o);
  return b;
}

template <typename T>
ad::Value<T> ResidualBlock<T>::forward(const ad::Value<T>& x, Mode mode) const {
  return ad::add(x, c2.forward(c1.forward(x, mode), mode));
}

template <typename T>
ResidualDenseBlock<T> ResidualDenseBlock<T>::make(ParamStore<T>& store,
                                                  const std::string& prefix,
                                                  index_t channels) {
  ResidualDenseBlock<T> b;
  typename ConvBlock<T>::Opts o;
  o.act = Act::relu;
  b.c1 = ConvBlock<T>::make(store, prefix + ".c1", channels, channels, o);
  b.c2 = ConvBlock<T>::make(store, prefix + ".c2", 2 * channels, channels, o);
  typename ConvBlock<T>::Opts f;
  f.kernel = 1;
  b.fuse = ConvBlock<T>::make(store, prefix + ".fuse", 3 * channels, channels, f);
  return b;
}

template <typename T>
ad::Value<T> ResidualDenseBlock<T>::forward(const ad::Value<T>& x, Mode mode) const {
  ad::Value<T> y1 = c1.forward(x, mode);
  ad::Value<T> y2 = c2.forward(ad::concat<T>({x, y1}), mode);
  ad::Value<T> fused = fuse.forward(ad::concat<T>({x, y1, y2}), mode);
  return ad::add(x, fused);
}

template <typename T>
RefineStack<T> RefineStack<T>::make(ParamStore<T>& store, const std::string& prefix,
                                    index_t channels, RefineKind kind, index_t count,
                                    const std::array<int, 3>& dilations, bool parallel_taps) {
  RefineStack<T> s;
  if (kind == RefineKind::none) return s;
  for (index_t i = 0; i < count; ++i) {
    const std::string p = prefix + ".b" + std::to_string(i);
    switch (kind) {
      case RefineKind::rmb:
        s.blocks.push_back(
            std::make_shared<Rmb<T>>(Rmb<T>::make(store, p, channels, dilations, parallel_taps)));
        break;
      case RefineKind::rb:
        s.blocks.push_back(
            std::make_shared<ResidualBlock<T>>(ResidualBlock<T>::make(store, p, channels)));
        break;
      case RefineKind::rdb:
        s.blocks.push_back(std::make_shared<ResidualDenseBlock<T>>(
            ResidualDenseBlock<T>::make(store, p, channels)));
        break;
      case RefineKind::none:
        break;
    }
  }
  return s;
}

template <typename T>
ad::Value<T> RefineStack<T>::forward(const ad::Value<T>& x, Mode mode) const {
  ad::Value<T> cur = x;
  for (const auto& b : blocks) cur = b->forward(cur, mode);
  return cur;
}

template struct Rmb<float>;
template struct Rmb<double>;
template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template struct ResidualDenseBlock<float>;
template struct ResidualDenseBlock<double>;
template struct RefineStack<float>;
template struct RefineStack<double>;

}  // namespace casdyf
