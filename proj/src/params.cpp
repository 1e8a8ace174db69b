// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/params.hpp"

#include <cmath>
#include <stdexcept>

namespace casdyf {

template <typename T>
void fill_init(Tensor<T>& t, Init init, index_t fan_in, Rng& rng) {
  switch (init) {
    case Init::zeros:
      t.fill(T(0));
      break;
    case Init::ones:
      t.fill(T(1));
      break;
    case Init::kaiming_uniform: {
      if (fan_in < 1) shape_error("init: kaiming_uniform needs fan_in >= 1");
      // leaky-slope variant (a = sqrt(5)): bound sqrt(6/((1+a^2)*fan)).
      // Deep stacks of gated 1x1 convs diverge at the raw sqrt(6/fan)
      // bound; this keeps per-layer gain below one while staying
      // fan-in-scaled.
      const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
      for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
      break;
    }
  }
}

template <typename T>
ad::Value<T>& ParamStore<T>::add(const std::string& name, const Shape& shape, Init init,
                                 index_t fan_in, bool learned) {
  if (index_.count(name))
    throw std::invalid_argument("param store: duplicate name '" + name + "'");
  Entry e;
  e.name = name;
  e.value = ad::leaf(Tensor<T>(shape), learned);
  e.learned = learned;
  e.init = init;
  e.fan_in = fan_in;
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return entries_.back().value;
}

template <typename T>
ad::Value<T>& ParamStore<T>::add_param(const std::string& name, const Shape& shape, Init init,
                                       index_t fan_in) {
  return add(name, shape, init, fan_in, true);
}

template <typename T>
ad::Value<T>& ParamStore<T>::add_state(const std::string& name, const Shape& shape, Init init) {
  return add(name, shape, init, 0, false);
}

template <typename T>
ad::Value<T>& ParamStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("param store: unknown name '" + name + "'");
  return entries_[it->second].value;
}

template <typename T>
const ad::Value<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("param store: unknown name '" + name + "'");
  return entries_[it->second].value;
}

template <typename T>
void ParamStore<T>::init_params(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& e : entries_) fill_init(e.value.val(), e.init, e.fan_in, rng);
}

template <typename T>
void ParamStore<T>::zero_grads() {
  for (auto& e : entries_)
    if (e.learned) e.value.zero_grad();
}

template <typename T>
void ParamStore<T>::zero_learned() {
  for (auto& e : entries_)
    if (e.learned) e.value.val().fill(T(0));
}

template <typename T>
index_t ParamStore<T>::learned_scalar_count() const {
  index_t total = 0;
  for (const auto& e : entries_)
    if (e.learned) total += e.value.val().numel();
  return total;
}

template <typename T>
index_t ParamStore<T>::total_scalar_count() const {
  index_t total = 0;
  for (const auto& e : entries_) total += e.value.val().numel();
  return total;
}

template class ParamStore<float>;
template class ParamStore<double>;
template void fill_init<float>(Tensor<float>&, Init, index_t, Rng&);
template void fill_init<double>(Tensor<double>&, Init, index_t, Rng&);

}  // namespace casdyf
