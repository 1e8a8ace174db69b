// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/optim.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "casdyf/kernels.hpp"

namespace casdyf {

void ScheduleConfig::validate() const {
  if (eta_min > eta0) shape_error("schedule: eta_min must be <= eta0");
  if (total_steps < 1) shape_error("schedule: total_steps must be >= 1");
}

double cosine_lr(const ScheduleConfig& cfg, std::uint64_t step) {
  cfg.validate();
  if (step == 0) return cfg.eta0;
  if (step >= cfg.total_steps) return cfg.eta_min;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.total_steps);
  return cfg.eta_min + 0.5 * (cfg.eta0 - cfg.eta_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

template <typename T>
Adam<T>::Adam(ParamStore<T>& store, const AdamConfig& cfg) : cfg_(cfg) {
  for (const auto& e : store.entries()) {
    if (!e.learned) continue;
    m_.emplace_back(e.value.val().shape);
    v_.emplace_back(e.value.val().shape);
    names_.push_back(e.name);
  }
}

template <typename T>
void Adam<T>::step(ParamStore<T>& store, double lr) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  std::size_t slot = 0;
  for (auto& e : store.entries()) {
    if (!e.learned) continue;
    Tensor<T>& p = e.value.val();
    Tensor<T>& g = e.value.grad();
    if (!kern::all_finite(g.ptr(), g.numel()))
      throw std::runtime_error("optimizer: non-finite gradient for parameter '" + e.name +
                               "', step aborted");
    Tensor<T>& m = m_[slot];
    Tensor<T>& v = v_[slot];
    const index_t n = p.numel();
    for (index_t i = 0; i < n; ++i) {
      const double gi = static_cast<double>(g.data[static_cast<std::size_t>(i)]);
      const double mi = cfg_.beta1 * static_cast<double>(m.data[static_cast<std::size_t>(i)]) +
                        (1.0 - cfg_.beta1) * gi;
      const double vi = cfg_.beta2 * static_cast<double>(v.data[static_cast<std::size_t>(i)]) +
                        (1.0 - cfg_.beta2) * gi * gi;
      m.data[static_cast<std::size_t>(i)] = static_cast<T>(mi);
      v.data[static_cast<std::size_t>(i)] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p.data[static_cast<std::size_t>(i)] = static_cast<T>(
          static_cast<double>(p.data[static_cast<std::size_t>(i)]) -
          lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
    g.fill(T(0));
    ++slot;
  }
}

template <typename T>
OptimSnapshot Adam<T>::snapshot(const ParamStore<T>& store) const {
  OptimSnapshot snap;
  snap.step = step_;
  snap.beta1 = cfg_.beta1;
  snap.beta2 = cfg_.beta2;
  snap.eps = cfg_.eps;
  std::size_t slot = 0;
  for (const auto& e : store.entries()) {
    if (!e.learned) continue;
    RawTensor rm, rv;
    rm.shape = m_[slot].shape;
    rv.shape = v_[slot].shape;
    rm.dtype = sizeof(T) == 4 ? "f32" : "f64";
    rv.dtype = rm.dtype;
    rm.bytes.resize(m_[slot].data.size() * sizeof(T));
    rv.bytes.resize(v_[slot].data.size() * sizeof(T));
    std::memcpy(rm.bytes.data(), m_[slot].data.data(), rm.bytes.size());
    std::memcpy(rv.bytes.data(), v_[slot].data.data(), rv.bytes.size());
    snap.m.emplace(e.name, std::move(rm));
    snap.v.emplace(e.name, std::move(rv));
    ++slot;
  }
  return snap;
}

template <typename T>
void Adam<T>::restore(const OptimSnapshot& snap, const ParamStore<T>& store) {
  cfg_.beta1 = snap.beta1;
  cfg_.beta2 = snap.beta2;
  cfg_.eps = snap.eps;
  step_ = snap.step;
  m_.clear();
  v_.clear();
  names_.clear();
  for (const auto& e : store.entries()) {
    if (!e.learned) continue;
    auto im = snap.m.find(e.name);
    auto iv = snap.v.find(e.name);
    if (im == snap.m.end() || iv == snap.v.end())
      throw std::runtime_error("optimizer: checkpoint missing moments for '" + e.name + "'");
    m_.push_back(im->second.template to_tensor<T>());
    v_.push_back(iv->second.template to_tensor<T>());
    names_.push_back(e.name);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace casdyf
