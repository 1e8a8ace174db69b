// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels. Included by the dispatcher and by the ISA
// variant TUs that fall back to scalar for some entries.
#pragma once

#include <cmath>

#include "casdyf/kernels.hpp"

namespace casdyf::kern {

namespace scalar {

template <typename T>
void add(T* dst, const T* a, const T* b, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

template <typename T>
void sub(T* dst, const T* a, const T* b, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

template <typename T>
void mul(T* dst, const T* a, const T* b, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

template <typename T>
void madd(T* dst, const T* a, const T* b, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

template <typename T>
void scale(T* dst, const T* x, T s, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] = s * x[i];
}

template <typename T>
void axpy(T* dst, const T* x, T s, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] += s * x[i];
}

template <typename T>
void relu(T* dst, const T* x, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd(T* gx, const T* x, const T* gy, index_t n) {
  for (index_t i = 0; i < n; ++i)
    if (x[i] > T(0)) gx[i] += gy[i];
}

template <typename T>
T dot(const T* a, const T* b, index_t n) {
  T acc = T(0);
  for (index_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T sum(const T* x, index_t n) {
  T acc = T(0);
  for (index_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename T>
double sum_abs(const T* x, index_t n) {
  double acc = 0.0;
  for (index_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(x[i]));
  return acc;
}

template <typename T>
double sum_sq(const T* x, index_t n) {
  double acc = 0.0;
  for (index_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    acc += v * v;
  }
  return acc;
}

template <typename T>
void conv_fwd(const T* src, index_t hp, index_t wp, const T* w, index_t cin,
              index_t cout, int kh, int kw, int stride, int dil, T* dst,
              index_t ho, index_t wo) {
  for (index_t co = 0; co < cout; ++co) {
    T* dplane = dst + co * ho * wo;
    for (index_t ci = 0; ci < cin; ++ci) {
      const T* splane = src + ci * hp * wp;
      const T* wk = w + ((co * cin + ci) * kh) * kw;
      if (kh == 1 && kw == 1 && stride == 1 && wp == wo && hp == ho) {
        const T wv = wk[0];
        if (wv != T(0))
          for (index_t i = 0; i < ho * wo; ++i) dplane[i] += wv * splane[i];
        continue;
      }
      if (kh == 3 && kw == 3 && stride == 1) {
        // one pass per output row, all nine taps accumulated
        for (index_t oy = 0; oy < ho; ++oy) {
          const T* r0 = splane + (oy + 0 * dil) * wp;
          const T* r1 = splane + (oy + 1 * dil) * wp;
          const T* r2 = splane + (oy + 2 * dil) * wp;
          T* drow = dplane + oy * wo;
          for (index_t ox = 0; ox < wo; ++ox) {
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
              for (index_t ox = 0; ox < wo; ++ox) drow[ox] += wv * srow[ox];
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
        const T wv = wk[0];
        if (wv != T(0))
          for (index_t i = 0; i < ho * wo; ++i) splane[i] += wv * gplane[i];
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
              for (index_t ox = 0; ox < wo; ++ox) srow[ox] += wv * grow[ox];
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
  for (index_t co = 0; co < cout; ++co) {
    const T* gplane = gdst + co * ho * wo;
    for (index_t ci = 0; ci < cin; ++ci) {
      const T* splane = src + ci * hp * wp;
      T* wk = gw + ((co * cin + ci) * kh) * kw;
      if (kh == 1 && kw == 1 && stride == 1 && wp == wo && hp == ho) {
        T acc = T(0);
        for (index_t i = 0; i < ho * wo; ++i) acc += splane[i] * gplane[i];
        wk[0] += acc;
        continue;
      }
      if (kh == 3 && kw == 3 && stride == 1) {
        T acc9[9] = {};
        for (index_t oy = 0; oy < ho; ++oy) {
          const T* r0 = splane + (oy + 0 * dil) * wp;
          const T* r1 = splane + (oy + 1 * dil) * wp;
          const T* r2 = splane + (oy + 2 * dil) * wp;
          const T* grow = gplane + oy * wo;
          for (index_t ox = 0; ox < wo; ++ox) {
            const T g = grow[ox];
            acc9[0] += r0[ox] * g;
            acc9[1] += r0[ox + dil] * g;
            acc9[2] += r0[ox + 2 * dil] * g;
            acc9[3] += r1[ox] * g;
            acc9[4] += r1[ox + dil] * g;
            acc9[5] += r1[ox + 2 * dil] * g;
            acc9[6] += r2[ox] * g;
            acc9[7] += r2[ox + dil] * g;
            acc9[8] += r2[ox + 2 * dil] * g;
          }
        }
        for (int t = 0; t < 9; ++t) wk[t] += acc9[t];
        continue;
      }
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          T acc = T(0);
          for (index_t oy = 0; oy < ho; ++oy) {
            const T* srow = splane + (oy * stride + ky * dil) * wp + kx * dil;
            const T* grow = gplane + oy * wo;
            if (stride == 1) {
              for (index_t ox = 0; ox < wo; ++ox) acc += srow[ox] * grow[ox];
            } else {
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
  t.sum_abs = sum_abs<T>;
  t.sum_sq = sum_sq<T>;
  t.conv_fwd = conv_fwd<T>;
  t.conv_bwd_in = conv_bwd_in<T>;
  t.conv_bwd_w = conv_bwd_w<T>;
  return t;
}

}  // namespace scalar

}  // namespace casdyf::kern
