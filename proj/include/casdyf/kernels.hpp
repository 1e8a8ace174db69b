// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops behind every tensor operation. Each entry
// point has a scalar reference implementation and, where the ISA is
// available, an AVX2 or NEON variant. The active table is resolved once
// at startup from CPU detection, overridable with CASDYF_SIMD
// (auto|scalar|avx2|neon) or force_isa() in tests. Equivalence of the
// variants against the scalar reference is covered by test_kernels.
#pragma once

#include <cstdint>

namespace casdyf::kern {

using index_t = std::int64_t;

enum class Isa { scalar, avx2, neon };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);

// Resolved once (CPU detection + CASDYF_SIMD); cached afterwards.
Isa active_isa();

// Test hook: pin the active table. Throws std::invalid_argument if the
// ISA is not supported on this machine.
void force_isa(Isa isa);
void reset_isa();

template <typename T>
struct Table {
  // elementwise
  void (*add)(T* dst, const T* a, const T* b, index_t n);
  void (*sub)(T* dst, const T* a, const T* b, index_t n);
  void (*mul)(T* dst, const T* a, const T* b, index_t n);
  void (*madd)(T* dst, const T* a, const T* b, index_t n);  // dst += a*b
  void (*scale)(T* dst, const T* x, T s, index_t n);        // dst = s*x
  void (*axpy)(T* dst, const T* x, T s, index_t n);         // dst += s*x
  void (*relu)(T* dst, const T* x, index_t n);
  void (*relu_bwd)(T* gx, const T* x, const T* gy, index_t n);  // gx += gy*(x>0)

  // reductions
  T (*dot)(const T* a, const T* b, index_t n);
  T (*sum)(const T* x, index_t n);
  double (*sum_abs)(const T* x, index_t n);  // double accumulator
  double (*sum_sq)(const T* x, index_t n);   // double accumulator

  // Direct convolution over pre-padded planes of one sample and one
  // group. src: cin planes of hp*wp, w: (cout,cin,kh,kw), dst: cout
  // planes of ho*wo, accumulated into (caller seeds bias/zero).
  void (*conv_fwd)(const T* src, index_t hp, index_t wp, const T* w, index_t cin,
                   index_t cout, int kh, int kw, int stride, int dil, T* dst,
                   index_t ho, index_t wo);
  // gsrc (padded layout) += w (*) gdst
  void (*conv_bwd_in)(T* gsrc, index_t hp, index_t wp, const T* w, index_t cin,
                      index_t cout, int kh, int kw, int stride, int dil,
                      const T* gdst, index_t ho, index_t wo);
  // gw += correlation of src windows with gdst
  void (*conv_bwd_w)(const T* src, index_t hp, index_t wp, T* gw, index_t cin,
                     index_t cout, int kh, int kw, int stride, int dil,
                     const T* gdst, index_t ho, index_t wo);
};

template <typename T>
const Table<T>& table(Isa isa);

template <typename T>
inline const Table<T>& tbl() {
  return table<T>(active_isa());
}

bool all_finite(const float* x, index_t n);
bool all_finite(const double* x, index_t n);

}  // namespace casdyf::kern
