// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/fft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace casdyf::fft {

namespace {

inline bool is_pow2(index_t n) { return n > 0 && (n & (n - 1)) == 0; }

// in-place iterative radix-2 decimation-in-time, forward sign (-i)
template <typename T>
void fft_pow2(std::complex<T>* a, index_t n, bool inverse) {
  for (index_t i = 1, j = 0; i < n; ++i) {
    index_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (index_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (index_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (index_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u(a[i + j]);
        const std::complex<double> v = std::complex<double>(a[i + j + len / 2]) * w;
        a[i + j] = std::complex<T>(u + v);
        a[i + j + len / 2] = std::complex<T>(u - v);
        w *= wl;
      }
    }
  }
}

// direct O(n^2) transform for non-power-of-two lengths
template <typename T>
void dft_naive(const std::complex<T>* in, std::complex<T>* out, index_t n, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  for (index_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (index_t j = 0; j < n; ++j) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k * j) /
                         static_cast<double>(n);
      acc += std::complex<double>(in[j]) * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = std::complex<T>(acc);
  }
}

template <typename T>
void transform_1d(std::complex<T>* a, index_t n, bool inverse, std::vector<std::complex<T>>& tmp) {
  if (n == 1) return;
  if (is_pow2(n)) {
    fft_pow2(a, n, inverse);
    return;
  }
  tmp.resize(static_cast<std::size_t>(n));
  dft_naive(a, tmp.data(), n, inverse);
  std::copy(tmp.begin(), tmp.end(), a);
}

template <typename T>
void transform_plane(std::complex<T>* buf, index_t h, index_t w, bool inverse) {
  std::vector<std::complex<T>> tmp;
  for (index_t y = 0; y < h; ++y) transform_1d(buf + y * w, w, inverse, tmp);
  std::vector<std::complex<T>> col(static_cast<std::size_t>(h));
  for (index_t x = 0; x < w; ++x) {
    for (index_t y = 0; y < h; ++y) col[y] = buf[y * w + x];
    transform_1d(col.data(), h, inverse, tmp);
    for (index_t y = 0; y < h; ++y) buf[y * w + x] = col[y];
  }
}

}  // namespace

template <typename T>
ComplexSpectrum<T> dft2(const Tensor<T>& x) {
  ComplexSpectrum<T> out(x.shape);
  const index_t plane = x.plane_size();
  std::vector<std::complex<T>> buf(static_cast<std::size_t>(plane));
  for (index_t n = 0; n < x.shape.n; ++n)
    for (index_t c = 0; c < x.shape.c; ++c) {
      const T* src = x.plane(n, c);
      for (index_t i = 0; i < plane; ++i) buf[i] = std::complex<T>(src[i], T(0));
      transform_plane(buf.data(), x.shape.h, x.shape.w, false);
      T* rp = out.re_plane(n, c);
      T* ip = out.im_plane(n, c);
      for (index_t i = 0; i < plane; ++i) {
        rp[i] = buf[i].real();
        ip[i] = buf[i].imag();
      }
    }
  return out;
}

namespace {

template <typename T>
Tensor<T> inverse_impl(const ComplexSpectrum<T>& s, bool normalize) {
  Tensor<T> out(s.shape);
  const index_t plane = s.plane_size();
  const T norm = normalize ? T(1) / static_cast<T>(plane) : T(1);
  std::vector<std::complex<T>> buf(static_cast<std::size_t>(plane));
  for (index_t n = 0; n < s.shape.n; ++n)
    for (index_t c = 0; c < s.shape.c; ++c) {
      const T* rp = s.re_plane(n, c);
      const T* ip = s.im_plane(n, c);
      for (index_t i = 0; i < plane; ++i) buf[i] = std::complex<T>(rp[i], ip[i]);
      transform_plane(buf.data(), s.shape.h, s.shape.w, true);
      T* dst = out.plane(n, c);
      for (index_t i = 0; i < plane; ++i) dst[i] = buf[i].real() * norm;
    }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> idft2(const ComplexSpectrum<T>& s) {
  return inverse_impl(s, true);
}

template <typename T>
Tensor<T> dft2_adjoint(const ComplexSpectrum<T>& s) {
  return inverse_impl(s, false);
}

template struct ComplexSpectrum<float>;
template struct ComplexSpectrum<double>;
template ComplexSpectrum<float> dft2<float>(const Tensor<float>&);
template ComplexSpectrum<double> dft2<double>(const Tensor<double>&);
template Tensor<float> idft2<float>(const ComplexSpectrum<float>&);
template Tensor<double> idft2<double>(const ComplexSpectrum<double>&);
template Tensor<float> dft2_adjoint<float>(const ComplexSpectrum<float>&);
template Tensor<double> dft2_adjoint<double>(const ComplexSpectrum<double>&);

}  // namespace casdyf::fft
