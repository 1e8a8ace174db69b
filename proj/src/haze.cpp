// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/haze.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace casdyf {

template <typename T>
Tensor<T> synth_haze(const Tensor<T>& clear, const HazeParams<T>& params) {
  if (params.beta <= 0) shape_error("synth_haze: beta must be > 0");
  if (clear.shape.c != 3) shape_error("synth_haze: expected 3 channels");
  if (params.depth.shape.h != clear.shape.h || params.depth.shape.w != clear.shape.w)
    shape_error("synth_haze: depth " + params.depth.shape.str() + " does not match " +
                clear.shape.str());
  Tensor<T> hazy(clear.shape);
  const index_t plane = clear.plane_size();
  for (index_t n = 0; n < clear.shape.n; ++n) {
    const T* d = params.depth.plane(0, 0);
    for (index_t c = 0; c < 3; ++c) {
      const T* j = clear.plane(n, c);
      T* out = hazy.plane(n, c);
      const double a = params.atmosphere[static_cast<std::size_t>(c)];
      for (index_t i = 0; i < plane; ++i) {
        const double t = std::exp(-params.beta * static_cast<double>(d[i]));
        out[i] = static_cast<T>(static_cast<double>(j[i]) * t + a * (1.0 - t));
      }
    }
  }
  hazy.ensure_finite("synth_haze");
  return hazy;
}

template <typename T>
Tensor<T> smooth_field(index_t h, index_t w, Rng& rng, int waves) {
  Tensor<T> f({1, 1, h, w});
  for (int k = 0; k < waves; ++k) {
    const double fy = static_cast<double>(rng.next_below(4));
    const double fx = static_cast<double>(rng.next_below(4));
    const double phase = rng.uniform(0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.3, 1.0);
    T* p = f.plane(0, 0);
    for (index_t y = 0; y < h; ++y)
      for (index_t x = 0; x < w; ++x)
        p[y * w + x] += static_cast<T>(
            amp * std::cos(2.0 * std::numbers::pi *
                               (fy * static_cast<double>(y) / static_cast<double>(h) +
                                fx * static_cast<double>(x) / static_cast<double>(w)) +
                           phase));
  }
  T lo = f.data[0], hi = f.data[0];
  for (T v : f.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const T span = hi - lo > T(1e-9) ? hi - lo : T(1);
  for (auto& v : f.data) v = (v - lo) / span;
  return f;
}

template <typename T>
Tensor<T> synth_clear_image(index_t h, index_t w, Rng& rng) {
  Tensor<T> img({1, 3, h, w});
  for (index_t c = 0; c < 3; ++c) {
    Tensor<T> base = smooth_field<T>(h, w, rng);
    std::copy(base.data.begin(), base.data.end(), img.plane(0, c));
  }
  // solid rectangles give the scene hard edges
  const int rects = 3 + static_cast<int>(rng.next_below(4));
  for (int r = 0; r < rects; ++r) {
    const index_t rh = 2 + static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(h / 2)));
    const index_t rw = 2 + static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(w / 2)));
    const index_t y0 = static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(h - rh + 1)));
    const index_t x0 = static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(w - rw + 1)));
    for (index_t c = 0; c < 3; ++c) {
      const T color = static_cast<T>(rng.uniform(0.0, 1.0));
      T* p = img.plane(0, c);
      for (index_t y = y0; y < y0 + rh; ++y)
        for (index_t x = x0; x < x0 + rw; ++x) p[y * w + x] = color;
    }
  }
  for (auto& v : img.data)
    v = std::clamp(v, T(0.03), T(0.97));
  return img;
}

template <typename T>
std::vector<ImagePair<T>> make_synth_dataset(index_t count, index_t h, index_t w,
                                             std::uint64_t seed,
                                             std::array<double, 2> beta_range,
                                             std::array<double, 2> atmo_range) {
  Rng rng(seed);
  std::vector<ImagePair<T>> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (index_t i = 0; i < count; ++i) {
    ImagePair<T> p;
    p.clear = synth_clear_image<T>(h, w, rng);
    HazeParams<T> hp;
    hp.beta = rng.uniform(beta_range[0], beta_range[1]);
    const double a = rng.uniform(atmo_range[0], atmo_range[1]);
    // slight per-channel tint around the common atmosphere level
    for (auto& av : hp.atmosphere) av = std::clamp(a + rng.uniform(-0.03, 0.03), 0.0, 1.0);
    Tensor<T> field = smooth_field<T>(h, w, rng);
    hp.depth = Tensor<T>({1, 1, h, w});
    for (std::size_t k = 0; k < field.data.size(); ++k)
      hp.depth.data[k] = static_cast<T>(0.3 + 1.2 * static_cast<double>(field.data[k]));
    p.hazy = synth_haze(p.clear, hp);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "img%04lld", static_cast<long long>(i));
    p.name = buf;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

#define CASDYF_INSTANTIATE_HAZE(T)                                                      \
  template struct HazeParams<T>;                                                        \
  template struct ImagePair<T>;                                                         \
  template Tensor<T> synth_haze<T>(const Tensor<T>&, const HazeParams<T>&);             \
  template Tensor<T> smooth_field<T>(index_t, index_t, Rng&, int);                      \
  template Tensor<T> synth_clear_image<T>(index_t, index_t, Rng&);                      \
  template std::vector<ImagePair<T>> make_synth_dataset<T>(index_t, index_t, index_t,   \
                                                           std::uint64_t,               \
                                                           std::array<double, 2>,       \
                                                           std::array<double, 2>);

CASDYF_INSTANTIATE_HAZE(float)
CASDYF_INSTANTIATE_HAZE(double)

}  // namespace casdyf
