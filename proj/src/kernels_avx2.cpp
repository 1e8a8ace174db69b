// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma; only reached
// after the runtime CPU check in kernels.cpp. Reductions use fixed
// lane-wise accumulation so results are identical run to run, though
// they may differ from the scalar table by normal rounding (the
// equivalence tests bound that difference).

#ifdef CASDYF_HAVE_AVX2

#include <immintrin.h>

#include <cmath>

#include "casdyf/kernels.hpp"

namespace casdyf::kern::avx2 {

namespace {

template <typename T>
struct V;

template <>
struct V<float> {
  using reg = __m256;
  static constexpr index_t width = 8;
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  static reg set1(float v) { return _mm256_set1_ps(v); }
  static reg zero() { return _mm256_setzero_ps(); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_ps(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg max(reg a, reg b) { return _mm256_max_ps(a, b); }
  static float reduce(reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
    return _mm_cvtss_f32(lo);
  }
};

template <>
struct V<double> {
  using reg = __m256d;
  static constexpr index_t width = 4;
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg set1(double v) { return _mm256_set1_pd(v); }
  static reg zero() { return _mm256_setzero_pd(); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg max(reg a, reg b) { return _mm256_max_pd(a, b); }
  static double reduce(reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  }
};

template <typename T>
void add(T* dst, const T* a, const T* b, index_t n) {
  using v = V<T>;
  index_t i = 0;
  for (; i + v::width <= n; i += v::width)
    v::store(dst + i, v::add(v::load(a + i), v::load(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

template <typename T>
void sub(T* dst, const T* a, const T* b, index_t n) {
  using v = V<T>;
  index_t i = 0;
  for (; i + v::width <= n; i += v::width)
    v::store(dst + i, v::sub(v::load(a + i), v::load(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

template <typename T>
void mul(T* dst, const T* a, const T* b, index_t n) {
  using v = V<T>;
  index_t i = 0;
  for (; i + v::width <= n; i += v::width)
    v::store(dst + i, v::mul(v::load(a + i), v::load(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

template <typename T>
void madd(T* dst, const T* a, const T* b, index_t n) {
  using v = V<T>;
  index_t i = 0;
  for (; i + v::width <= n; i += v::width)
    v::store(dst + i, v::fmadd(v::load(a + i), v::load(b + i), v::load(dst + i)));
  for (; i < n; ++i) dst[i] += a[i] * b[i];
}

template <typename T>
void scale(T* dst, const T* x, T s, index_t n) {
  using v = V<T>;
  const typename v::reg vs = v::set1(s);
  index_t i = 0;
  for (; i + v::width <= n; i += v::width) v::store(dst + i, v::mul(vs, v::load(x + i)));
  for (; i < n; ++i) dst[i] = s * x[i];
}

template <typename T>
void axpy(T* dst, const T* x, T s, index_t n) {
  using v = V<T>;
  const typename v::reg vs = v::set1(s);
  index_t i = 0;
  for (; i + v::width <= n; i += v::width)
    v::store(dst + i, v::fmadd(vs, v::load(x + i), v::load(dst + i)));
  for (; i < n; ++i) dst[i] += s * x[i];
}

template <typename T>
void relu(T* dst, const T* x, index_t n) {
  using v = V<T>;
  const typename v::reg z = v::zero();
  index_t i = 0;
  for (; i + v::width <= n; i += v::width) v::store(dst + i, v::max(z, v::load(x + i)));
  for (; i < n; ++i) dst[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd(T* gx, const T* x, const T* gy, index_t n) {
  for (index_t i = 0; i < n; ++i)
    if (x[i] > T(0)) gx[i] += gy[i];
}

template <typename T>
T dot(const T* a, const T* b, index_t n) {
  using v = V<T>;
  typename v::reg acc = v::zero();
  index_t i = 0;
  for (; i + v::width <= n; i += v::width)
    acc = v::fmadd(v::load(a + i), v::load(b + i), acc);
  T r = v::reduce(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

template <typename T>
T sum(const T* x, index_t n) {
  using v = V<T>;
  typename v::reg acc = v::zero();
  index_t i = 0;
  for (; i + v::width <= n; i += v::width) acc = v::add(acc, v::load(x + i));
  T r = v::reduce(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

// double-precision accumulators regardless of T
double sum_abs_f(const float* x, index_t n) {
  __m256d acc = _mm256_setzero_pd();
  const __m256 signmask = _mm256_set1_ps(-0.0f);
  index_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vv = _mm256_andnot_ps(signmask, _mm256_loadu_ps(x + i));
    acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm256_castps256_ps128(vv)));
    acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm256_extractf128_ps(vv, 1)));
  }
  double r = V<double>::reduce(acc);
  for (; i < n; ++i) r += std::abs(static_cast<double>(x[i]));
  return r;
}

double sum_abs_d(const double* x, index_t n) {
  const __m256d signmask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  index_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(signmask, _mm256_loadu_pd(x + i)));
  double r = V<double>::reduce(acc);
  for (; i < n; ++i) r += std::abs(x[i]);
  return r;
}

double sum_sq_f(const float* x, index_t n) {
  __m256d acc = _mm256_setzero_pd();
  index_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vv = _mm256_loadu_ps(x + i);
    __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(vv));
    __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(vv, 1));
    acc = _mm256_fmadd_pd(lo, lo, acc);
    acc = _mm256_fmadd_pd(hi, hi, acc);
  }
  double r = V<double>::reduce(acc);
  for (; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    r += v * v;
  }
  return r;
}

double sum_sq_d(const double* x, index_t n) {
  __m256d acc = _mm256_setzero_pd();
  index_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = V<double>::reduce(acc);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

template <typename T>
inline void row_axpy(T* dst, const T* src, T s, index_t n) {
  using v = V<T>;
  const typename v::reg vs = v::set1(s);
  index_t i = 0;
  for (; i + v::width <= n; i += v::width)
    v::store(dst + i, v::fmadd(vs, v::load(src + i), v::load(dst + i)));
  for (; i < n; ++i) dst[i] += s * src[i];
}

template <typename T>
void conv_fwd(const T* src, index_t hp, index_t wp, const T* w, index_t cin,
              index_t cout, int kh, int kw, int stride, int dil, T* dst,
              index_t ho, index_t wo) {
  using v = V<T>;
  for (index_t co = 0; co < cout; ++co) {
    T* dplane = dst + co * ho * wo;
    for (index_t ci = 0; ci < cin; ++ci) {
      const T* splane = src + ci * hp * wp;
      const T* wk = w + ((co * cin + ci) * kh) * kw;
      if (kh == 1 && kw == 1 && stride == 1 && wp == wo && hp == ho) {
        if (wk[0] != T(0)) row_axpy(dplane, splane, wk[0], ho * wo);
        continue;
      }
      if (kh == 3 && kw == 3 && stride == 1) {
        typename v::reg wv[9];
        for (int t = 0; t < 9; ++t) wv[t] = v::set1(wk[t]);
        for (index_t oy = 0; oy < ho; ++oy) {
          const T* r0 = splane + (oy + 0 * dil) * wp;
          const T* r1 = splane + (oy + 1 * dil) * wp;
          const T* r2 = splane + (oy + 2 * dil) * wp;
          T* drow = dplane + oy * wo;
          index_t ox = 0;
          for (; ox + v::width <= wo; ox += v::width) {
            typename v::reg acc = v::load(drow + ox);
            acc = v::fmadd(wv[0], v::load(r0 + ox), acc);
            acc = v::fmadd(wv[1], v::load(r0 + ox + dil), acc);
            acc = v::fmadd(wv[2], v::load(r0 + ox + 2 * dil), acc);
            acc = v::fmadd(wv[3], v::load(r1 + ox), acc);
            acc = v::fmadd(wv[4], v::load(r1 + ox + dil), acc);
            acc = v::fmadd(wv[5], v::load(r1 + ox + 2 * dil), acc);
            acc = v::fmadd(wv[6], v::load(r2 + ox), acc);
            acc = v::fmadd(wv[7], v::load(r2 + ox + dil), acc);
            acc = v::fmadd(wv[8], v::load(r2 + ox + 2 * dil), acc);
            v::store(drow + ox, acc);
          }
          for (; ox < wo; ++ox) {
            T acc = drow[ox];
            acc += wk[0] * r0[ox] + wk[1] * r0[ox + dil] + wk[2] * r0[ox + 2 * dil];
            acc += wk[3] * r1[ox] + wk[4] * r1[ox + dil] + wk[5] * r1[ox + 2 * dil];
            acc += wk[6] * r2[ox] + wk[7] * r2[ox + dil] + wk[8] * r2[ox + 2 * dil];
            drow[ox] = acc;
          }
        }
        continue;
      }
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const T wv = wk[ky * kw + kx];
          if (wv == T(0)) continue;
          for (index_t oy = 0; oy < ho; ++oy) {
            const T* srow = splane + (oy * stride + ky * dil) * wp + kx * dil;
            T* drow = dplane + oy * wo;
            if (stride == 1) {
              row_axpy(drow, srow, wv, wo);
            } else {
              for (index_t ox = 0; ox < wo; ++ox) drow[ox] += wv * srow[ox * stride];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_bwd_in(T* gsrc, index_t hp, index_t wp, const T* w, index_t cin,
                 index_t cout, int kh, int kw, int stride, int dil,
                 const T* gdst, index_t ho, index_t wo) {
  for (index_t co = 0; co < cout; ++co) {
    const T* gplane = gdst + co * ho * wo;
    for (index_t ci = 0; ci < cin; ++ci) {
      T* splane = gsrc + ci * hp * wp;
      const T* wk = w + ((co * cin + ci) * kh) * kw;
      if (kh == 1 && kw == 1 && stride == 1 && wp == wo && hp == ho) {
        if (wk[0] != T(0)) row_axpy(splane, gplane, wk[0], ho * wo);
        continue;
      }
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const T wv = wk[ky * kw + kx];
          if (wv == T(0)) continue;
          for (index_t oy = 0; oy < ho; ++oy) {
            T* srow = splane + (oy * stride + ky * dil) * wp + kx * dil;
            const T* grow = gplane + oy * wo;
            if (stride == 1) {
              row_axpy(srow, grow, wv, wo);
            } else {
              for (index_t ox = 0; ox < wo; ++ox) srow[ox * stride] += wv * grow[ox];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_bwd_w(const T* src, index_t hp, index_t wp, T* gw, index_t cin,
                index_t cout, int kh, int kw, int stride, int dil,
                const T* gdst, index_t ho, index_t wo) {
  using v = V<T>;
  for (index_t co = 0; co < cout; ++co) {
    const T* gplane = gdst + co * ho * wo;
    for (index_t ci = 0; ci < cin; ++ci) {
      const T* splane = src + ci * hp * wp;
      T* wk = gw + ((co * cin + ci) * kh) * kw;
      if (kh == 1 && kw == 1 && stride == 1 && wp == wo && hp == ho) {
        wk[0] += dot(splane, gplane, ho * wo);
        continue;
      }
      if (kh == 3 && kw == 3 && stride == 1) {
        typename v::reg acc9[9];
        for (int t = 0; t < 9; ++t) acc9[t] = v::zero();
        T tail9[9] = {};
        for (index_t oy = 0; oy < ho; ++oy) {
          const T* r0 = splane + (oy + 0 * dil) * wp;
          const T* r1 = splane + (oy + 1 * dil) * wp;
          const T* r2 = splane + (oy + 2 * dil) * wp;
          const T* grow = gplane + oy * wo;
          index_t ox = 0;
          for (; ox + v::width <= wo; ox += v::width) {
            const typename v::reg g = v::load(grow + ox);
            acc9[0] = v::fmadd(v::load(r0 + ox), g, acc9[0]);
            acc9[1] = v::fmadd(v::load(r0 + ox + dil), g, acc9[1]);
            acc9[2] = v::fmadd(v::load(r0 + ox + 2 * dil), g, acc9[2]);
            acc9[3] = v::fmadd(v::load(r1 + ox), g, acc9[3]);
            acc9[4] = v::fmadd(v::load(r1 + ox + dil), g, acc9[4]);
            acc9[5] = v::fmadd(v::load(r1 + ox + 2 * dil), g, acc9[5]);
            acc9[6] = v::fmadd(v::load(r2 + ox), g, acc9[6]);
            acc9[7] = v::fmadd(v::load(r2 + ox + dil), g, acc9[7]);
            acc9[8] = v::fmadd(v::load(r2 + ox + 2 * dil), g, acc9[8]);
          }
          for (; ox < wo; ++ox) {
            const T g = grow[ox];
            tail9[0] += r0[ox] * g;
            tail9[1] += r0[ox + dil] * g;
            tail9[2] += r0[ox + 2 * dil] * g;
            tail9[3] += r1[ox] * g;
            tail9[4] += r1[ox + dil] * g;
            tail9[5] += r1[ox + 2 * dil] * g;
            tail9[6] += r2[ox] * g;
            tail9[7] += r2[ox + dil] * g;
            tail9[8] += r2[ox + 2 * dil] * g;
          }
        }
        for (int t = 0; t < 9; ++t) wk[t] += v::reduce(acc9[t]) + tail9[t];
        continue;
      }
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          T acc = T(0);
          if (stride == 1) {
            typename v::reg vacc = v::zero();
            for (index_t oy = 0; oy < ho; ++oy) {
              const T* srow = splane + (oy + ky * dil) * wp + kx * dil;
              const T* grow = gplane + oy * wo;
              index_t ox = 0;
              for (; ox + v::width <= wo; ox += v::width)
                vacc = v::fmadd(v::load(srow + ox), v::load(grow + ox), vacc);
              for (; ox < wo; ++ox) acc += srow[ox] * grow[ox];
            }
            acc += v::reduce(vacc);
          } else {
            for (index_t oy = 0; oy < ho; ++oy) {
              const T* srow = splane + (oy * stride + ky * dil) * wp + kx * dil;
              const T* grow = gplane + oy * wo;
              for (index_t ox = 0; ox < wo; ++ox) acc += srow[ox * stride] * grow[ox];
            }
          }
          wk[ky * kw + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
Table<T> make_table() {
  Table<T> t;
  t.add = add<T>;
  t.sub = sub<T>;
  t.mul = mul<T>;
  t.madd = madd<T>;
  t.scale = scale<T>;
  t.axpy = axpy<T>;
  t.relu = relu<T>;
  t.relu_bwd = relu_bwd<T>;
  t.dot = dot<T>;
  t.sum = sum<T>;
  if constexpr (sizeof(T) == 4) {
    t.sum_abs = [](const T* x, index_t n) { return sum_abs_f(reinterpret_cast<const float*>(x), n); };
    t.sum_sq = [](const T* x, index_t n) { return sum_sq_f(reinterpret_cast<const float*>(x), n); };
  } else {
    t.sum_abs = [](const T* x, index_t n) { return sum_abs_d(reinterpret_cast<const double*>(x), n); };
    t.sum_sq = [](const T* x, index_t n) { return sum_sq_d(reinterpret_cast<const double*>(x), n); };
  }
  t.conv_fwd = conv_fwd<T>;
  t.conv_bwd_in = conv_bwd_in<T>;
  t.conv_bwd_w = conv_bwd_w<T>;
  return t;
}

}  // namespace

template <typename T>
const Table<T>& get() {
  static const Table<T> t = make_table<T>();
  return t;
}

template const Table<float>& get<float>();
template const Table<double>& get<double>();

}  // namespace casdyf::kern::avx2

#endif  // CASDYF_HAVE_AVX2
