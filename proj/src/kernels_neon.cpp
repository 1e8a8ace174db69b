// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// NEON variants for the elementwise and reduction kernels. The
// convolution cores fall back to the scalar reference on ARM.

#ifdef CASDYF_HAVE_NEON

#include <arm_neon.h>

#include <cmath>
#include <type_traits>

#include "casdyf/kernels.hpp"
#include "kernels_ref.hpp"

namespace casdyf::kern {
namespace neon {

namespace {

void add_f(float* dst, const float* a, const float* b, index_t n) {
  index_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_f(float* dst, const float* a, const float* b, index_t n) {
  index_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_f(float* dst, const float* a, const float* b, index_t n) {
  index_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void madd_f(float* dst, const float* a, const float* b, index_t n) {
  index_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(dst + i, vfmaq_f32(vld1q_f32(dst + i), vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) dst[i] += a[i] * b[i];
}

void scale_f(float* dst, const float* x, float s, index_t n) {
  index_t i = 0;
  const float32x4_t vs = vdupq_n_f32(s);
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmulq_f32(vs, vld1q_f32(x + i)));
  for (; i < n; ++i) dst[i] = s * x[i];
}

void axpy_f(float* dst, const float* x, float s, index_t n) {
  index_t i = 0;
  const float32x4_t vs = vdupq_n_f32(s);
  for (; i + 4 <= n; i += 4)
    vst1q_f32(dst + i, vfmaq_f32(vld1q_f32(dst + i), vs, vld1q_f32(x + i)));
  for (; i < n; ++i) dst[i] += s * x[i];
}

void relu_f(float* dst, const float* x, index_t n) {
  index_t i = 0;
  const float32x4_t z = vdupq_n_f32(0.0f);
  for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmaxq_f32(z, vld1q_f32(x + i)));
  for (; i < n; ++i) dst[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

float dot_f(const float* a, const float* b, index_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  index_t i = 0;
  for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
  float r = vaddvq_f32(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

float sum_f(const float* x, index_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  index_t i = 0;
  for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
  float r = vaddvq_f32(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

}  // namespace

template <typename T>
const Table<T>& get() {
  static const Table<T> t = [] {
    Table<T> s = scalar::make_table<T>();
    if constexpr (std::is_same_v<T, float>) {
      s.add = add_f;
      s.sub = sub_f;
      s.mul = mul_f;
      s.madd = madd_f;
      s.scale = scale_f;
      s.axpy = axpy_f;
      s.relu = relu_f;
      s.dot = dot_f;
      s.sum = sum_f;
    }
    return s;
  }();
  return t;
}

template const Table<float>& get<float>();
template const Table<double>& get<double>();

}  // namespace neon
}  // namespace casdyf::kern

#endif  // CASDYF_HAVE_NEON
