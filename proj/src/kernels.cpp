// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels and runtime ISA selection.

#include "casdyf/kernels.hpp"

#include "kernels_ref.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace casdyf::kern {



#ifdef CASDYF_HAVE_AVX2
namespace avx2 {
template <typename T>
const Table<T>& get();
}
#endif
#ifdef CASDYF_HAVE_NEON
namespace neon {
template <typename T>
const Table<T>& get();
}
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CASDYF_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool cpu_has_neon() {
#ifdef CASDYF_HAVE_NEON
  return true;
#else
  return false;
#endif
}

std::atomic<int> g_forced{-1};  // -1 = auto

Isa detect() {
  const char* env = std::getenv("CASDYF_SIMD");
  if (env) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && cpu_has_avx2()) return Isa::avx2;
    if (v == "neon" && cpu_has_neon()) return Isa::neon;
    // unknown or unsupported value: fall through to auto
  }
  if (cpu_has_avx2()) return Isa::avx2;
  if (cpu_has_neon()) return Isa::neon;
  return Isa::scalar;
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "?";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return cpu_has_avx2();
    case Isa::neon: return cpu_has_neon();
  }
  return false;
}

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  static const Isa detected = detect();
  return detected;
}

void force_isa(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument(std::string("force_isa: ") + isa_name(isa) +
                                " not supported on this machine");
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { g_forced.store(-1, std::memory_order_relaxed); }

template <typename T>
const Table<T>& table(Isa isa) {
  static const Table<T> scalar_table = scalar::make_table<T>();
  switch (isa) {
    case Isa::scalar: return scalar_table;
#ifdef CASDYF_HAVE_AVX2
    case Isa::avx2: return avx2::get<T>();
#endif
#ifdef CASDYF_HAVE_NEON
    case Isa::neon: return neon::get<T>();
#endif
    default: return scalar_table;
  }
}

template const Table<float>& table<float>(Isa);
template const Table<double>& table<double>(Isa);

bool all_finite(const float* x, index_t n) {
  for (index_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

bool all_finite(const double* x, index_t n) {
  for (index_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

}  // namespace casdyf::kern
