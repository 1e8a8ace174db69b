// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// DFT against the O(N^4) direct-summation oracle, plus the transform
// invariants the loss and the spectrum analysis rely on.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "casdyf/fft.hpp"
#include "casdyf/rng.hpp"
#include "test_util.hpp"

using namespace casdyf;
using testutil::random_tensor;

namespace {

// direct double-loop DFT, written independently of the implementation
template <typename T>
fft::ComplexSpectrum<double> dft_oracle(const Tensor<T>& x) {
  const index_t H = x.shape.h, W = x.shape.w;
  fft::ComplexSpectrum<double> out(x.shape);
  for (index_t n = 0; n < x.shape.n; ++n)
    for (index_t c = 0; c < x.shape.c; ++c)
      for (index_t u = 0; u < H; ++u)
        for (index_t v = 0; v < W; ++v) {
          std::complex<double> acc(0, 0);
          for (index_t y = 0; y < H; ++y)
            for (index_t xx = 0; xx < W; ++xx) {
              const double ang = -2.0 * std::numbers::pi *
                                 (static_cast<double>(u * y) / H +
                                  static_cast<double>(v * xx) / W);
              acc += static_cast<double>(x.at(n, c, y, xx)) *
                     std::complex<double>(std::cos(ang), std::sin(ang));
            }
          out.re_plane(n, c)[u * W + v] = acc.real();
          out.im_plane(n, c)[u * W + v] = acc.imag();
        }
  return out;
}

}  // namespace

TEST_CASE("unit impulse at the origin has a flat spectrum of ones") {
  Tensor<double> x({1, 1, 4, 4});
  x.at(0, 0, 0, 0) = 1.0;
  auto s = fft::dft2(x);
  for (index_t i = 0; i < 16; ++i) {
    CHECK(s.re[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.im[i]) < 1e-12);
  }
}

TEST_CASE("constant plane concentrates in the DC bin") {
  const double c = 0.37;
  Tensor<double> x({1, 1, 4, 4}, c);
  auto s = fft::dft2(x);
  CHECK(s.re[0] == doctest::Approx(16.0 * c).epsilon(1e-12));
  for (index_t i = 1; i < 16; ++i) {
    CHECK(std::abs(s.re[i]) < 1e-6);
    CHECK(std::abs(s.im[i]) < 1e-6);
  }
}

TEST_CASE("dft2 matches the direct-summation oracle") {
  Rng rng(31);
  SUBCASE("8x8 power of two") {
    auto x = random_tensor<double>({1, 1, 8, 8}, rng);
    auto got = fft::dft2(x);
    auto want = dft_oracle(x);
    for (std::size_t i = 0; i < got.re.size(); ++i) {
      CHECK(std::abs(got.re[i] - want.re[i]) < 1e-4);
      CHECK(std::abs(got.im[i] - want.im[i]) < 1e-4);
    }
  }
  SUBCASE("6x10 non power of two") {
    auto x = random_tensor<double>({1, 2, 6, 10}, rng);
    auto got = fft::dft2(x);
    auto want = dft_oracle(x);
    for (std::size_t i = 0; i < got.re.size(); ++i) {
      CHECK(std::abs(got.re[i] - want.re[i]) < 1e-4);
      CHECK(std::abs(got.im[i] - want.im[i]) < 1e-4);
    }
  }
}

TEST_CASE("round trip: idft2(dft2(x)) = x") {
  Rng rng(32);
  SUBCASE("f32 within 1e-5 relative") {
    auto x = random_tensor<float>({2, 3, 16, 16}, rng);
    auto back = fft::idft2(fft::dft2(x));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      num += std::abs(static_cast<double>(back.data[i]) - static_cast<double>(x.data[i]));
      den += std::abs(static_cast<double>(x.data[i]));
    }
    CHECK(num / den < 1e-5);
  }
  SUBCASE("f64 tight, odd sizes") {
    auto x = random_tensor<double>({1, 1, 7, 9}, rng);
    auto back = fft::idft2(fft::dft2(x));
    CHECK(testutil::max_abs_diff(x, back) < 1e-10);
  }
}

TEST_CASE("Parseval: sum|x|^2 = (1/HW) sum|X|^2") {
  Rng rng(33);
  auto x = random_tensor<float>({1, 2, 32, 32}, rng);
  auto s = fft::dft2(x);
  double lhs = 0.0;
  for (float v : x.data) lhs += static_cast<double>(v) * v;
  double rhs = 0.0;
  for (std::size_t i = 0; i < s.re.size(); ++i)
    rhs += static_cast<double>(s.re[i]) * s.re[i] + static_cast<double>(s.im[i]) * s.im[i];
  rhs /= 32.0 * 32.0;
  CHECK(std::abs(lhs - rhs) / lhs < 1e-4);
}

TEST_CASE("dft2_adjoint is the adjoint of dft2") {
  // <F x, y>_C = <x, F^H y>_R for the real part
  Rng rng(34);
  auto x = random_tensor<double>({1, 1, 6, 6}, rng);
  fft::ComplexSpectrum<double> y({1, 1, 6, 6});
  for (auto& v : y.re) v = rng.uniform(-1, 1);
  for (auto& v : y.im) v = rng.uniform(-1, 1);
  auto fx = fft::dft2(x);
  double lhs = 0.0;
  for (std::size_t i = 0; i < fx.re.size(); ++i)
    lhs += fx.re[i] * y.re[i] + fx.im[i] * y.im[i];
  auto fy = fft::dft2_adjoint(y);
  double rhs = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * fy.data[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}
