// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/layers.hpp"

namespace casdyf {

template <typename T>
BnParams<T> BnParams<T>::make(ParamStore<T>& store, const std::string& prefix,
                              index_t channels) {
  BnParams<T> bn;
  const Shape s{1, channels, 1, 1};
  bn.gamma = store.add_param(prefix + ".gamma", s, Init::ones);
  bn.beta = store.add_param(prefix + ".beta", s, Init::zeros);
  bn.running_mean = store.add_state(prefix + ".running_mean", s, Init::zeros);
  bn.running_var = store.add_state(prefix + ".running_var", s, Init::ones);
  return bn;
}

template <typename T>
ad::Value<T> BnParams<T>::forward(const ad::Value<T>& x, Mode mode) const {
  auto rm = running_mean;
  auto rv = running_var;
  return ad::batch_norm(x, gamma, beta, rm, rv, mode == Mode::train, kBnMomentum, kBnEps);
}

template <typename T>
ConvBlock<T> ConvBlock<T>::make(ParamStore<T>& store, const std::string& prefix, index_t cin,
                                index_t cout, const Opts& opts) {
  ConvBlock<T> blk;
  blk.spec.stride = opts.stride;
  blk.spec.dilation = opts.dilation;
  blk.spec.groups = opts.groups;
  blk.spec.pad_mode = opts.pad_mode;
  blk.spec.pad = opts.pad >= 0 ? opts.pad : opts.dilation * (opts.kernel - 1) / 2;
  blk.act = opts.act;
  const index_t cin_g = cin / opts.groups;
  const index_t fan_in = cin_g * opts.kernel * opts.kernel;
  blk.weight = store.add_param(prefix + ".weight",
                               Shape{cout, cin_g, opts.kernel, opts.kernel},
                               Init::kaiming_uniform, fan_in);
  if (opts.with_bias)
    blk.bias = store.add_param(prefix + ".bias", Shape{1, cout, 1, 1}, Init::zeros);
  if (opts.with_bn) blk.bn = BnParams<T>::make(store, prefix + ".bn", cout);
  return blk;
}

template <typename T>
ad::Value<T> ConvBlock<T>::forward(const ad::Value<T>& x, Mode mode) const {
  ad::Value<T> y = ad::conv2d(x, weight, bias, spec);
  if (bn) y = bn->forward(y, mode);
  if (act == Act::relu) y = ad::relu(y);
  return y;
}

template <typename T>
index_t ConvBlock<T>::param_count() const {
  index_t total = weight.val().numel();
  if (bias) total += bias->val().numel();
  if (bn) total += bn->gamma.val().numel() + bn->beta.val().numel();
  return total;
}

template <typename T>
Downsample<T> Downsample<T>::make(ParamStore<T>& store, const std::string& prefix,
                                  index_t cin, index_t cout) {
  Downsample<T> d;
  typename ConvBlock<T>::Opts o;
  o.stride = 2;
  d.conv = ConvBlock<T>::make(store, prefix + ".conv", cin, cout, o);
  return d;
}

template <typename T>
ad::Value<T> Downsample<T>::forward(const ad::Value<T>& x, Mode mode) const {
  if (x.shape().h % 2 != 0 || x.shape().w % 2 != 0)
    shape_error("downsample: even H,W required, got " + x.shape().str());
  return conv.forward(x, mode);
}

template <typename T>
Upsample<T> Upsample<T>::make(ParamStore<T>& store, const std::string& prefix, index_t cin,
                              index_t cout) {
  Upsample<T> u;
  u.conv = ConvBlock<T>::make(store, prefix + ".conv", cin, cout, {});
  return u;
}

template <typename T>
ad::Value<T> Upsample<T>::forward(const ad::Value<T>& x, Mode mode) const {
  return conv.forward(ad::resize_double(x), mode);
}

template <typename T>
GateMlp<T> GateMlp<T>::make(ParamStore<T>& store, const std::string& prefix, index_t cin,
                            index_t hidden, index_t cout) {
  GateMlp<T> m;
  typename ConvBlock<T>::Opts o;
  o.kernel = 1;
  o.act = Act::relu;
  m.fc1 = ConvBlock<T>::make(store, prefix + ".fc1", cin, hidden, o);
  o.act = Act::none;
  m.fc2 = ConvBlock<T>::make(store, prefix + ".fc2", hidden, cout, o);
  return m;
}

template <typename T>
ad::Value<T> GateMlp<T>::forward(const ad::Value<T>& pooled, Mode mode) const {
  return fc2.forward(fc1.forward(pooled, mode), mode);
}

template struct BnParams<float>;
template struct BnParams<double>;
template struct ConvBlock<float>;
template struct ConvBlock<double>;
template struct Downsample<float>;
template struct Downsample<double>;
template struct Upsample<float>;
template struct Upsample<double>;
template struct GateMlp<float>;
template struct GateMlp<double>;

}  // namespace casdyf
