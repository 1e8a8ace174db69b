// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// 2-D DFT over every (n,c) plane. Radix-2 FFT when a dimension is a
// power of two, direct summation otherwise. Convention: no scaling on
// the forward transform, 1/(H*W) on the inverse.
#pragma once

#include "casdyf/tensor.hpp"

namespace casdyf::fft {

template <typename T>
struct ComplexSpectrum {
  Shape shape{};
  std::vector<T> re, im;

  ComplexSpectrum() = default;
  explicit ComplexSpectrum(const Shape& s)
      : shape(s),
        re(static_cast<std::size_t>(s.numel()), T(0)),
        im(static_cast<std::size_t>(s.numel()), T(0)) {}

  index_t plane_size() const { return shape.h * shape.w; }
  T* re_plane(index_t n, index_t c) {
    return re.data() + static_cast<std::size_t>((n * shape.c + c) * plane_size());
  }
  const T* re_plane(index_t n, index_t c) const {
    return re.data() + static_cast<std::size_t>((n * shape.c + c) * plane_size());
  }
  T* im_plane(index_t n, index_t c) {
    return im.data() + static_cast<std::size_t>((n * shape.c + c) * plane_size());
  }
  const T* im_plane(index_t n, index_t c) const {
    return im.data() + static_cast<std::size_t>((n * shape.c + c) * plane_size());
  }
};

template <typename T>
ComplexSpectrum<T> dft2(const Tensor<T>& x);

// real part of the normalized inverse transform
template <typename T>
Tensor<T> idft2(const ComplexSpectrum<T>& s);

// real part of DFT^H applied to s (no normalization); the adjoint used
// by gradients of spectra
template <typename T>
Tensor<T> dft2_adjoint(const ComplexSpectrum<T>& s);

}  // namespace casdyf::fft
