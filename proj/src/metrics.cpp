// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace casdyf {

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  check_same_shape(a, b, "psnr");
  if (peak <= 0) shape_error("psnr: peak must be > 0");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWin = 11;

std::array<double, kWin * kWin> gaussian_window(double sigma) {
  std::array<double, kWin * kWin> w{};
  const int half = kWin / 2;
  double sum = 0.0;
  for (int y = 0; y < kWin; ++y)
    for (int x = 0; x < kWin; ++x) {
      const double dy = y - half, dx = x - half;
      w[static_cast<std::size_t>(y * kWin + x)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      sum += w[static_cast<std::size_t>(y * kWin + x)];
    }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  check_same_shape(a, b, "ssim");
  if (a.shape.h < kWin || a.shape.w < kWin)
    shape_error("ssim: image must be at least 11x11, got " + a.shape.str());
  static const std::array<double, kWin * kWin> win = gaussian_window(1.5);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const index_t vh = a.shape.h - kWin + 1;
  const index_t vw = a.shape.w - kWin + 1;
  double total = 0.0;
  index_t count = 0;
  for (index_t n = 0; n < a.shape.n; ++n)
    for (index_t c = 0; c < a.shape.c; ++c) {
      const T* pa = a.plane(n, c);
      const T* pb = b.plane(n, c);
      for (index_t oy = 0; oy < vh; ++oy)
        for (index_t ox = 0; ox < vw; ++ox) {
          double mu_a = 0, mu_b = 0, sa = 0, sb = 0, sab = 0;
          for (int wy = 0; wy < kWin; ++wy)
            for (int wx = 0; wx < kWin; ++wx) {
              const double wgt = win[static_cast<std::size_t>(wy * kWin + wx)];
              const double va = pa[(oy + wy) * a.shape.w + ox + wx];
              const double vb = pb[(oy + wy) * a.shape.w + ox + wx];
              mu_a += wgt * va;
              mu_b += wgt * vb;
              sa += wgt * va * va;
              sb += wgt * vb * vb;
              sab += wgt * va * vb;
            }
          const double var_a = sa - mu_a * mu_a;
          const double var_b = sb - mu_b * mu_b;
          const double cov = sab - mu_a * mu_b;
          const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
          const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
          total += num / den;
          ++count;
        }
    }
  return total / static_cast<double>(count);
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template double ssim<float>(const Tensor<float>&, const Tensor<float>&, double);
template double ssim<double>(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace casdyf
