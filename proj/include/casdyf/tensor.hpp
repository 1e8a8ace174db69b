// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Rank-4 NCHW tensor. Row-major contiguous buffer, float or double.
#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace casdyf {

using index_t = std::int64_t;

struct Shape {
  index_t n = 0;
  index_t c = 0;
  index_t h = 0;
  index_t w = 0;

  index_t numel() const { return n * c * h * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
  }
};

[[noreturn]] inline void shape_error(const std::string& msg) {
  throw std::invalid_argument(msg);
}

template <typename T>
class Tensor {
 public:
  Shape shape{};
  std::vector<T> data;
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(const Shape& s, T fill = T(0)) : shape(s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
      shape_error("tensor: negative dimension in " + s.str());
    data.assign(static_cast<std::size_t>(s.numel()), fill);
  }

  static Tensor zeros(const Shape& s) { return Tensor(s); }
  static Tensor full(const Shape& s, T v) { return Tensor(s, v); }

  index_t numel() const { return shape.numel(); }
  index_t plane_size() const { return shape.h * shape.w; }
  bool empty() const { return data.empty(); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& at(index_t n, index_t c, index_t y, index_t x) {
    return data[static_cast<std::size_t>(((n * shape.c + c) * shape.h + y) * shape.w + x)];
  }
  const T& at(index_t n, index_t c, index_t y, index_t x) const {
    return data[static_cast<std::size_t>(((n * shape.c + c) * shape.h + y) * shape.w + x)];
  }

  // pointer to the (n,c) plane of h*w values
  T* plane(index_t n, index_t c) {
    return data.data() + static_cast<std::size_t>((n * shape.c + c) * plane_size());
  }
  const T* plane(index_t n, index_t c) const {
    return data.data() + static_cast<std::size_t>((n * shape.c + c) * plane_size());
  }

  // pointer to the full sample block of c*h*w values
  T* sample(index_t n) {
    return data.data() + static_cast<std::size_t>(n * shape.c * plane_size());
  }
  const T* sample(index_t n) const {
    return data.data() + static_cast<std::size_t>(n * shape.c * plane_size());
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  // same buffer, new shape; element count must match
  Tensor reshaped(const Shape& s) const {
    if (s.numel() != numel())
      shape_error("reshape: element count mismatch, " + shape.str() + " -> " + s.str());
    Tensor out = *this;
    out.shape = s;
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    out.requires_grad = requires_grad;
    return out;
  }

  // NaN/Inf is surfaced as an error, never propagated silently
  void ensure_finite(const char* where) const {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(static_cast<double>(data[i]))) {
        std::ostringstream os;
        os << where << ": non-finite value at flat index " << i << " in tensor " << shape.str();
        throw std::runtime_error(os.str());
      }
    }
  }
};

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (!(a.shape == b.shape))
    shape_error(std::string(where) + ": shape mismatch " + a.shape.str() + " vs " + b.shape.str());
}

}  // namespace casdyf
