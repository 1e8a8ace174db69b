// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Image quality metrics. PSNR over the whole tensor; SSIM with an
// 11x11 Gaussian window (sigma 1.5, K1=0.01, K2=0.03), computed per
// channel over valid window positions and averaged.
#pragma once

#include "casdyf/tensor.hpp"

namespace casdyf {

// 10*log10(peak^2 / MSE); +inf when the images are identical. CSV
// emission caps the sentinel at 100 dB.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

// mean SSIM in [-1, 1]; requires H, W >= 11
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

inline double cap_psnr(double v, double cap = 100.0) { return v > cap ? cap : v; }

}  // namespace casdyf
