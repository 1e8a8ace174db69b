// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "casdyf/kernels.hpp"
#include "casdyf/threading.hpp"

namespace casdyf::ops {

bool& MacMeter::active_ref() {
  thread_local bool active = false;
  return active;
}

std::uint64_t& MacMeter::count_ref() {
  thread_local std::uint64_t count = 0;
  return count;
}

namespace {

// reflect-101 index: mirror around the borders without repeating them
inline index_t reflect_index(index_t i, index_t n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

template <typename T>
void pad_plane(const T* src, index_t h, index_t w, T* dst, int pad, PadMode mode) {
  const index_t wp = w + 2 * pad;
  if (mode == PadMode::zero) {
    for (index_t y = -pad; y < h + pad; ++y) {
      T* drow = dst + (y + pad) * wp;
      if (y < 0 || y >= h) {
        std::fill(drow, drow + wp, T(0));
        continue;
      }
      std::fill(drow, drow + pad, T(0));
      std::memcpy(drow + pad, src + y * w, sizeof(T) * static_cast<std::size_t>(w));
      std::fill(drow + pad + w, drow + wp, T(0));
    }
    return;
  }
  for (index_t y = -pad; y < h + pad; ++y) {
    const T* srow = src + reflect_index(y, h) * w;
    T* drow = dst + (y + pad) * wp;
    for (index_t x = -pad; x < w + pad; ++x) drow[x + pad] = srow[reflect_index(x, w)];
  }
}

template <typename T>
void pad_plane_adjoint(const T* g, index_t h, index_t w, T* dst, int pad, PadMode mode) {
  const index_t wp = w + 2 * pad;
  for (index_t y = -pad; y < h + pad; ++y) {
    const T* grow = g + (y + pad) * wp;
    if (mode == PadMode::zero) {
      if (y < 0 || y >= h) continue;
      T* drow = dst + y * w;
      kern::tbl<T>().add(drow, drow, grow + pad, w);
      continue;
    }
    T* drow = dst + reflect_index(y, h) * w;
    for (index_t x = -pad; x < w + pad; ++x) drow[reflect_index(x, w)] += grow[x + pad];
  }
}

void check_pad(int pad, index_t h, index_t w, PadMode mode) {
  if (pad < 0) shape_error("conv2d: negative pad_amount");
  if (mode == PadMode::reflect && (pad >= h || pad >= w)) {
    std::ostringstream os;
    os << "reflect padding needs pad_amount < spatial dim, got pad=" << pad << " for "
       << h << "x" << w;
    shape_error(os.str());
  }
}

}  // namespace

template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, int pad, PadMode mode) {
  check_pad(pad, x.shape.h, x.shape.w, mode);
  Tensor<T> out({x.shape.n, x.shape.c, x.shape.h + 2 * pad, x.shape.w + 2 * pad});
  for (index_t n = 0; n < x.shape.n; ++n)
    for (index_t c = 0; c < x.shape.c; ++c)
      pad_plane(x.plane(n, c), x.shape.h, x.shape.w, out.plane(n, c), pad, mode);
  return out;
}

template <typename T>
Tensor<T> pad2d_adjoint(const Tensor<T>& g, int pad, PadMode mode, index_t h, index_t w) {
  Tensor<T> out({g.shape.n, g.shape.c, h, w});
  for (index_t n = 0; n < g.shape.n; ++n)
    for (index_t c = 0; c < g.shape.c; ++c)
      pad_plane_adjoint(g.plane(n, c), h, w, out.plane(n, c), pad, mode);
  return out;
}

namespace {

struct ConvDims {
  index_t cin, cout, cin_g, cout_g, ho, wo, hp, wp;
  int kh, kw;
};

template <typename T>
ConvDims conv_check(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                    const Conv2dSpec& s) {
  ConvDims d{};
  d.cin = x.shape.c;
  d.cout = w.shape.n;
  d.kh = static_cast<int>(w.shape.h);
  d.kw = static_cast<int>(w.shape.w);
  if (s.groups < 1) shape_error("conv2d: groups must be >= 1");
  if (d.cin % s.groups != 0)
    shape_error("conv2d: input channels " + std::to_string(d.cin) +
                " not divisible by groups " + std::to_string(s.groups));
  if (d.cout % s.groups != 0)
    shape_error("conv2d: output channels " + std::to_string(d.cout) +
                " not divisible by groups " + std::to_string(s.groups));
  d.cin_g = d.cin / s.groups;
  d.cout_g = d.cout / s.groups;
  if (w.shape.c != d.cin_g)
    shape_error("conv2d: weight expects " + std::to_string(w.shape.c) +
                " input channels per group, input provides " + std::to_string(d.cin_g) +
                " (input shape " + x.shape.str() + ", weight shape " + w.shape.str() + ")");
  if (d.kh % 2 == 0 || d.kw % 2 == 0) shape_error("conv2d: kernel size must be odd");
  if (s.stride < 1 || s.dilation < 1) shape_error("conv2d: stride/dilation must be >= 1");
  if (bias && !(bias->shape == Shape{1, d.cout, 1, 1}))
    shape_error("conv2d: bias shape " + bias->shape.str() + " != (1," +
                std::to_string(d.cout) + ",1,1)");
  check_pad(s.pad, x.shape.h, x.shape.w, s.pad_mode);
  const index_t eff_h = static_cast<index_t>(s.dilation) * (d.kh - 1) + 1;
  const index_t eff_w = static_cast<index_t>(s.dilation) * (d.kw - 1) + 1;
  d.hp = x.shape.h + 2 * s.pad;
  d.wp = x.shape.w + 2 * s.pad;
  if (eff_h > d.hp || eff_w > d.wp)
    shape_error("conv2d: dilated kernel footprint " + std::to_string(eff_h) + "x" +
                std::to_string(eff_w) + " exceeds padded input " + std::to_string(d.hp) +
                "x" + std::to_string(d.wp));
  d.ho = (d.hp - eff_h) / s.stride + 1;
  d.wo = (d.wp - eff_w) / s.stride + 1;
  return d;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w,
                 const std::type_identity_t<Tensor<T>>* bias,
                 const Conv2dSpec& spec) {
  const ConvDims d = conv_check(x, w, bias, spec);
  Tensor<T> out({x.shape.n, d.cout, d.ho, d.wo});
  MacMeter::charge(static_cast<std::uint64_t>(x.shape.n) * d.cout * d.cin_g * d.kh * d.kw *
                   d.ho * d.wo);
  const auto& k = kern::tbl<T>();
  const bool needs_pad = spec.pad > 0;
  parallel_for(0, x.shape.n, [&](index_t n) {
    Tensor<T> padded;
    const T* src = x.sample(n);
    if (needs_pad) {
      padded = Tensor<T>({1, d.cin, d.hp, d.wp});
      for (index_t c = 0; c < d.cin; ++c)
        pad_plane(x.plane(n, c), x.shape.h, x.shape.w, padded.plane(0, c), spec.pad,
                  spec.pad_mode);
      src = padded.ptr();
    }
    T* dst = out.sample(n);
    if (bias) {
      for (index_t co = 0; co < d.cout; ++co)
        std::fill(dst + co * d.ho * d.wo, dst + (co + 1) * d.ho * d.wo, bias->data[co]);
    }
    for (int g = 0; g < spec.groups; ++g) {
      k.conv_fwd(src + g * d.cin_g * d.hp * d.wp, d.hp, d.wp,
                 w.ptr() + g * d.cout_g * d.cin_g * d.kh * d.kw, d.cin_g, d.cout_g, d.kh,
                 d.kw, spec.stride, spec.dilation, dst + g * d.cout_g * d.ho * d.wo, d.ho,
                 d.wo);
    }
  });
  out.ensure_finite("conv2d");
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Conv2dSpec& spec,
                     const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb) {
  const ConvDims d = conv_check(x, w, static_cast<const Tensor<T>*>(nullptr), spec);
  if (!(gy.shape == Shape{x.shape.n, d.cout, d.ho, d.wo}))
    shape_error("conv2d_backward: grad shape " + gy.shape.str() + " != expected " +
                Shape{x.shape.n, d.cout, d.ho, d.wo}.str());
  const auto& k = kern::tbl<T>();
  if (gb) {
    for (index_t n = 0; n < gy.shape.n; ++n)
      for (index_t co = 0; co < d.cout; ++co)
        gb->data[co] += k.sum(gy.plane(n, co), d.ho * d.wo);
  }
  if (!gx && !gw) return;
  for (index_t n = 0; n < x.shape.n; ++n) {
    Tensor<T> padded;
    const T* src = x.sample(n);
    if (spec.pad > 0 && gw) {
      padded = Tensor<T>({1, d.cin, d.hp, d.wp});
      for (index_t c = 0; c < d.cin; ++c)
        pad_plane(x.plane(n, c), x.shape.h, x.shape.w, padded.plane(0, c), spec.pad,
                  spec.pad_mode);
      src = padded.ptr();
    }
    const T* gout = gy.sample(n);
    if (gw) {
      for (int g = 0; g < spec.groups; ++g)
        k.conv_bwd_w(src + g * d.cin_g * d.hp * d.wp, d.hp, d.wp,
                     gw->ptr() + g * d.cout_g * d.cin_g * d.kh * d.kw, d.cin_g, d.cout_g,
                     d.kh, d.kw, spec.stride, spec.dilation,
                     gout + g * d.cout_g * d.ho * d.wo, d.ho, d.wo);
    }
    if (gx) {
      Tensor<T> gpad({1, d.cin, d.hp, d.wp});
      for (int g = 0; g < spec.groups; ++g)
        k.conv_bwd_in(gpad.ptr() + g * d.cin_g * d.hp * d.wp, d.hp, d.wp,
                      w.ptr() + g * d.cout_g * d.cin_g * d.kh * d.kw, d.cin_g, d.cout_g,
                      d.kh, d.kw, spec.stride, spec.dilation,
                      gout + g * d.cout_g * d.ho * d.wo, d.ho, d.wo);
      if (spec.pad > 0) {
        for (index_t c = 0; c < d.cin; ++c)
          pad_plane_adjoint(gpad.plane(0, c), x.shape.h, x.shape.w, gx->plane(n, c),
                            spec.pad, spec.pad_mode);
      } else {
        T* dst = gx->sample(n);
        k.add(dst, dst, gpad.ptr(), d.cin * d.hp * d.wp);
      }
    }
  }
}

// ---- batch norm -------------------------------------------------------------

namespace {

template <typename T>
void bn_shape_check(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  const Shape want{1, x.shape.c, 1, 1};
  if (!(gamma.shape == want) || !(beta.shape == want))
    shape_error("batch_norm: parameter shapes must be " + want.str() + " for input " +
                x.shape.str());
}

}  // namespace

template <typename T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                           Tensor<T>& running_mean, Tensor<T>& running_var, double momentum,
                           double eps, std::type_identity_t<BnCache<T>>* cache) {
  bn_shape_check(x, gamma, beta);
  const index_t C = x.shape.c;
  const index_t plane = x.plane_size();
  const index_t count = x.shape.n * plane;
  if (count < 2)
    shape_error("batch_norm: train mode requires N*H*W >= 2, got " + std::to_string(count));
  Tensor<T> out(x.shape);
  MacMeter::charge(static_cast<std::uint64_t>(x.numel()));
  if (cache) {
    cache->mean.assign(static_cast<std::size_t>(C), T(0));
    cache->inv_std.assign(static_cast<std::size_t>(C), T(0));
  }
  for (index_t c = 0; c < C; ++c) {
    double sum = 0.0;
    for (index_t n = 0; n < x.shape.n; ++n) {
      const T* p = x.plane(n, c);
      for (index_t i = 0; i < plane; ++i) sum += static_cast<double>(p[i]);
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (index_t n = 0; n < x.shape.n; ++n) {
      const T* p = x.plane(n, c);
      for (index_t i = 0; i < plane; ++i) {
        const double d = static_cast<double>(p[i]) - mean;
        ss += d * d;
      }
    }
    const double var = ss / static_cast<double>(count);
    const double inv = 1.0 / std::sqrt(var + eps);
    const double g = static_cast<double>(gamma.data[c]);
    const double b = static_cast<double>(beta.data[c]);
    for (index_t n = 0; n < x.shape.n; ++n) {
      const T* p = x.plane(n, c);
      T* q = out.plane(n, c);
      for (index_t i = 0; i < plane; ++i)
        q[i] = static_cast<T>((static_cast<double>(p[i]) - mean) * inv * g + b);
    }
    // running estimate keeps the unbiased variance
    const double unbiased =
        count > 1 ? ss / static_cast<double>(count - 1) : var;
    running_mean.data[c] =
        static_cast<T>((1.0 - momentum) * static_cast<double>(running_mean.data[c]) +
                       momentum * mean);
    running_var.data[c] =
        static_cast<T>((1.0 - momentum) * static_cast<double>(running_var.data[c]) +
                       momentum * unbiased);
    if (cache) {
      cache->mean[c] = static_cast<T>(mean);
      cache->inv_std[c] = static_cast<T>(inv);
    }
  }
  out.ensure_finite("batch_norm");
  return out;
}

template <typename T>
Tensor<T> batch_norm_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                          const Tensor<T>& running_mean, const Tensor<T>& running_var,
                          double eps, std::type_identity_t<BnCache<T>>* cache) {
  bn_shape_check(x, gamma, beta);
  const index_t C = x.shape.c;
  const index_t plane = x.plane_size();
  Tensor<T> out(x.shape);
  MacMeter::charge(static_cast<std::uint64_t>(x.numel()));
  if (cache) {
    cache->mean.assign(static_cast<std::size_t>(C), T(0));
    cache->inv_std.assign(static_cast<std::size_t>(C), T(0));
  }
  for (index_t c = 0; c < C; ++c) {
    const double mean = static_cast<double>(running_mean.data[c]);
    const double inv = 1.0 / std::sqrt(static_cast<double>(running_var.data[c]) + eps);
    const T a = static_cast<T>(inv * static_cast<double>(gamma.data[c]));
    const T b = static_cast<T>(static_cast<double>(beta.data[c]) -
                               mean * inv * static_cast<double>(gamma.data[c]));
    for (index_t n = 0; n < x.shape.n; ++n) {
      const T* p = x.plane(n, c);
      T* q = out.plane(n, c);
      for (index_t i = 0; i < plane; ++i) q[i] = a * p[i] + b;
    }
    if (cache) {
      cache->mean[c] = static_cast<T>(mean);
      cache->inv_std[c] = static_cast<T>(inv);
    }
  }
  out.ensure_finite("batch_norm");
  return out;
}

template <typename T>
void batch_norm_backward_train(const Tensor<T>& x, const Tensor<T>& gamma,
                               const BnCache<T>& cache, const Tensor<T>& gy, Tensor<T>* gx,
                               Tensor<T>* ggamma, Tensor<T>* gbeta) {
  const index_t C = x.shape.c;
  const index_t plane = x.plane_size();
  const double count = static_cast<double>(x.shape.n * plane);
  for (index_t c = 0; c < C; ++c) {
    const double mean = static_cast<double>(cache.mean[c]);
    const double inv = static_cast<double>(cache.inv_std[c]);
    double sum_g = 0.0, sum_gx = 0.0;
    for (index_t n = 0; n < x.shape.n; ++n) {
      const T* gp = gy.plane(n, c);
      const T* xp = x.plane(n, c);
      for (index_t i = 0; i < plane; ++i) {
        const double g = static_cast<double>(gp[i]);
        sum_g += g;
        sum_gx += g * (static_cast<double>(xp[i]) - mean) * inv;
      }
    }
    if (gbeta) gbeta->data[c] += static_cast<T>(sum_g);
    if (ggamma) ggamma->data[c] += static_cast<T>(sum_gx);
    if (gx) {
      const double g = static_cast<double>(gamma.data[c]);
      for (index_t n = 0; n < x.shape.n; ++n) {
        const T* gp = gy.plane(n, c);
        const T* xp = x.plane(n, c);
        T* dp = gx->plane(n, c);
        for (index_t i = 0; i < plane; ++i) {
          const double xhat = (static_cast<double>(xp[i]) - mean) * inv;
          const double v = static_cast<double>(gp[i]) - sum_g / count - xhat * sum_gx / count;
          dp[i] += static_cast<T>(g * inv * v);
        }
      }
    }
  }
}

template <typename T>
void batch_norm_backward_eval(const Tensor<T>& x, const Tensor<T>& gamma,
                              const BnCache<T>& cache, const Tensor<T>& gy, Tensor<T>* gx,
                              Tensor<T>* ggamma, Tensor<T>* gbeta) {
  const index_t C = x.shape.c;
  const index_t plane = x.plane_size();
  for (index_t c = 0; c < C; ++c) {
    const double mean = static_cast<double>(cache.mean[c]);
    const double inv = static_cast<double>(cache.inv_std[c]);
    const double g = static_cast<double>(gamma.data[c]);
    double sum_g = 0.0, sum_gx = 0.0;
    for (index_t n = 0; n < x.shape.n; ++n) {
      const T* gp = gy.plane(n, c);
      const T* xp = x.plane(n, c);
      T* dp = gx ? gx->plane(n, c) : nullptr;
      for (index_t i = 0; i < plane; ++i) {
        const double gv = static_cast<double>(gp[i]);
        sum_g += gv;
        sum_gx += gv * (static_cast<double>(xp[i]) - mean) * inv;
        if (dp) dp[i] += static_cast<T>(gv * g * inv);
      }
    }
    if (gbeta) gbeta->data[c] += static_cast<T>(sum_g);
    if (ggamma) ggamma->data[c] += static_cast<T>(sum_gx);
  }
}

// ---- pointwise ---------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape);
  kern::tbl<T>().relu(out.ptr(), x.ptr(), x.numel());
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out(x.shape);
  const index_t n = x.numel();
  for (index_t i = 0; i < n; ++i) {
    const T v = x.data[static_cast<std::size_t>(i)];
    if (v >= T(0)) {
      out.data[static_cast<std::size_t>(i)] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out.data[static_cast<std::size_t>(i)] = e / (T(1) + e);
    }
  }
  out.ensure_finite("sigmoid");
  return out;
}

template <typename T>
Tensor<T> softmax_groups(const Tensor<T>& x, index_t group) {
  if (group < 1) shape_error("softmax: group length must be >= 1");
  if (x.shape.c % group != 0)
    shape_error("softmax: channels " + std::to_string(x.shape.c) +
                " not divisible by group " + std::to_string(group));
  Tensor<T> out(x.shape);
  const index_t plane = x.plane_size();
  const index_t ngroups = x.shape.c / group;
  for (index_t n = 0; n < x.shape.n; ++n) {
    for (index_t g = 0; g < ngroups; ++g) {
      for (index_t p = 0; p < plane; ++p) {
        T mx = x.plane(n, g * group)[p];
        for (index_t j = 1; j < group; ++j)
          mx = std::max(mx, x.plane(n, g * group + j)[p]);
        double denom = 0.0;
        for (index_t j = 0; j < group; ++j) {
          const T e = std::exp(x.plane(n, g * group + j)[p] - mx);
          out.plane(n, g * group + j)[p] = e;
          denom += static_cast<double>(e);
        }
        for (index_t j = 0; j < group; ++j)
          out.plane(n, g * group + j)[p] = static_cast<T>(
              static_cast<double>(out.plane(n, g * group + j)[p]) / denom);
      }
    }
  }
  out.ensure_finite("softmax");
  return out;
}

template <typename T>
void softmax_groups_backward(const Tensor<T>& y, index_t group, const Tensor<T>& gy,
                             Tensor<T>* gx) {
  const index_t plane = y.plane_size();
  const index_t ngroups = y.shape.c / group;
  for (index_t n = 0; n < y.shape.n; ++n) {
    for (index_t g = 0; g < ngroups; ++g) {
      for (index_t p = 0; p < plane; ++p) {
        double dot = 0.0;
        for (index_t j = 0; j < group; ++j)
          dot += static_cast<double>(gy.plane(n, g * group + j)[p]) *
                 static_cast<double>(y.plane(n, g * group + j)[p]);
        for (index_t j = 0; j < group; ++j) {
          const double s = static_cast<double>(y.plane(n, g * group + j)[p]);
          gx->plane(n, g * group + j)[p] +=
              static_cast<T>(s * (static_cast<double>(gy.plane(n, g * group + j)[p]) - dot));
        }
      }
    }
  }
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  if (x.shape.h < 1 || x.shape.w < 1) shape_error("global_avg_pool: empty spatial dims");
  Tensor<T> out({x.shape.n, x.shape.c, 1, 1});
  const index_t plane = x.plane_size();
  const auto& k = kern::tbl<T>();
  for (index_t n = 0; n < x.shape.n; ++n)
    for (index_t c = 0; c < x.shape.c; ++c)
      out.at(n, c, 0, 0) = k.sum(x.plane(n, c), plane) / static_cast<T>(plane);
  out.ensure_finite("global_avg_pool");
  return out;
}

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x) {
  Tensor<T> out({x.shape.n, 1, x.shape.h, x.shape.w});
  const index_t plane = x.plane_size();
  const auto& k = kern::tbl<T>();
  const T inv = T(1) / static_cast<T>(x.shape.c);
  for (index_t n = 0; n < x.shape.n; ++n) {
    T* dst = out.plane(n, 0);
    for (index_t c = 0; c < x.shape.c; ++c) k.add(dst, dst, x.plane(n, c), plane);
    k.scale(dst, dst, inv, plane);
  }
  return out;
}

// ---- resize -------------------------------------------------------------------

template <typename T>
Tensor<T> resize_half(const Tensor<T>& x) {
  if (x.shape.h % 2 != 0 || x.shape.w % 2 != 0)
    shape_error("resize: downscale requires even H,W, got " + x.shape.str());
  Tensor<T> out({x.shape.n, x.shape.c, x.shape.h / 2, x.shape.w / 2});
  MacMeter::charge(4 * static_cast<std::uint64_t>(out.numel()));
  for (index_t n = 0; n < x.shape.n; ++n)
    for (index_t c = 0; c < x.shape.c; ++c) {
      const T* sp = x.plane(n, c);
      T* dp = out.plane(n, c);
      for (index_t y = 0; y < out.shape.h; ++y)
        for (index_t xx = 0; xx < out.shape.w; ++xx) {
          const T* r0 = sp + (2 * y) * x.shape.w + 2 * xx;
          const T* r1 = r0 + x.shape.w;
          dp[y * out.shape.w + xx] =
              static_cast<T>(0.25) * (r0[0] + r0[1] + r1[0] + r1[1]);
        }
    }
  out.ensure_finite("resize");
  return out;
}

template <typename T>
Tensor<T> resize_half_backward(const Tensor<T>& gy, const Shape& in_shape) {
  Tensor<T> gx(in_shape);
  for (index_t n = 0; n < gy.shape.n; ++n)
    for (index_t c = 0; c < gy.shape.c; ++c) {
      const T* gp = gy.plane(n, c);
      T* dp = gx.plane(n, c);
      for (index_t y = 0; y < gy.shape.h; ++y)
        for (index_t xx = 0; xx < gy.shape.w; ++xx) {
          const T q = static_cast<T>(0.25) * gp[y * gy.shape.w + xx];
          T* r0 = dp + (2 * y) * in_shape.w + 2 * xx;
          T* r1 = r0 + in_shape.w;
          r0[0] += q;
          r0[1] += q;
          r1[0] += q;
          r1[1] += q;
        }
    }
  return gx;
}

namespace {

// align-corners-false source coordinate mapping for 2x upsample
struct LerpIdx {
  index_t i0, i1;
  double w1;  // weight on i1; weight on i0 is 1-w1
};

inline LerpIdx up2_index(index_t o, index_t n_in) {
  const double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
  double f = std::floor(src);
  index_t i0 = static_cast<index_t>(f);
  double w1 = src - f;
  index_t i1 = i0 + 1;
  if (i0 < 0) { i0 = 0; }
  if (i1 < 0) { i1 = 0; }
  if (i0 > n_in - 1) { i0 = n_in - 1; }
  if (i1 > n_in - 1) { i1 = n_in - 1; }
  return {i0, i1, w1};
}

}  // namespace

template <typename T>
Tensor<T> resize_double(const Tensor<T>& x) {
  Tensor<T> out({x.shape.n, x.shape.c, 2 * x.shape.h, 2 * x.shape.w});
  MacMeter::charge(4 * static_cast<std::uint64_t>(out.numel()));
  std::vector<LerpIdx> ys(static_cast<std::size_t>(out.shape.h));
  std::vector<LerpIdx> xs(static_cast<std::size_t>(out.shape.w));
  for (index_t y = 0; y < out.shape.h; ++y) ys[y] = up2_index(y, x.shape.h);
  for (index_t xx = 0; xx < out.shape.w; ++xx) xs[xx] = up2_index(xx, x.shape.w);
  for (index_t n = 0; n < x.shape.n; ++n)
    for (index_t c = 0; c < x.shape.c; ++c) {
      const T* sp = x.plane(n, c);
      T* dp = out.plane(n, c);
      for (index_t y = 0; y < out.shape.h; ++y) {
        const auto& iy = ys[y];
        const T* r0 = sp + iy.i0 * x.shape.w;
        const T* r1 = sp + iy.i1 * x.shape.w;
        for (index_t xx = 0; xx < out.shape.w; ++xx) {
          const auto& ix = xs[xx];
          const double top = (1.0 - ix.w1) * r0[ix.i0] + ix.w1 * r0[ix.i1];
          const double bot = (1.0 - ix.w1) * r1[ix.i0] + ix.w1 * r1[ix.i1];
          dp[y * out.shape.w + xx] = static_cast<T>((1.0 - iy.w1) * top + iy.w1 * bot);
        }
      }
    }
  out.ensure_finite("resize");
  return out;
}

template <typename T>
Tensor<T> resize_double_backward(const Tensor<T>& gy, const Shape& in_shape) {
  Tensor<T> gx(in_shape);
  std::vector<LerpIdx> ys(static_cast<std::size_t>(gy.shape.h));
  std::vector<LerpIdx> xs(static_cast<std::size_t>(gy.shape.w));
  for (index_t y = 0; y < gy.shape.h; ++y) ys[y] = up2_index(y, in_shape.h);
  for (index_t xx = 0; xx < gy.shape.w; ++xx) xs[xx] = up2_index(xx, in_shape.w);
  for (index_t n = 0; n < gy.shape.n; ++n)
    for (index_t c = 0; c < gy.shape.c; ++c) {
      const T* gp = gy.plane(n, c);
      T* dp = gx.plane(n, c);
      for (index_t y = 0; y < gy.shape.h; ++y) {
        const auto& iy = ys[y];
        for (index_t xx = 0; xx < gy.shape.w; ++xx) {
          const auto& ix = xs[xx];
          const double g = static_cast<double>(gp[y * gy.shape.w + xx]);
          dp[iy.i0 * in_shape.w + ix.i0] += static_cast<T>((1.0 - iy.w1) * (1.0 - ix.w1) * g);
          dp[iy.i0 * in_shape.w + ix.i1] += static_cast<T>((1.0 - iy.w1) * ix.w1 * g);
          dp[iy.i1 * in_shape.w + ix.i0] += static_cast<T>(iy.w1 * (1.0 - ix.w1) * g);
          dp[iy.i1 * in_shape.w + ix.i1] += static_cast<T>(iy.w1 * ix.w1 * g);
        }
      }
    }
  return gx;
}

// ---- dynamic filtering ----------------------------------------------------------

template <typename T>
Tensor<T> dynamic_filter(const Tensor<T>& x, const Tensor<T>& k) {
  if (k.shape.n != x.shape.n || k.shape.c != x.shape.c)
    shape_error("dynamic_filter: kernel " + k.shape.str() + " does not match input " +
                x.shape.str());
  if (k.shape.h != k.shape.w || k.shape.h % 2 == 0)
    shape_error("dynamic_filter: kernel must be square and odd, got " + k.shape.str());
  const int ks = static_cast<int>(k.shape.h);
  const int pad = (ks - 1) / 2;
  check_pad(pad, x.shape.h, x.shape.w, PadMode::reflect);
  Tensor<T> out(x.shape);
  MacMeter::charge(static_cast<std::uint64_t>(x.numel()) * ks * ks);
  const auto& kt = kern::tbl<T>();
  const index_t hp = x.shape.h + 2 * pad;
  const index_t wp = x.shape.w + 2 * pad;
  parallel_for(0, x.shape.n * x.shape.c, [&](index_t nc) {
    const index_t n = nc / x.shape.c;
    const index_t c = nc % x.shape.c;
    Tensor<T> padded({1, 1, hp, wp});
    pad_plane(x.plane(n, c), x.shape.h, x.shape.w, padded.ptr(), pad, PadMode::reflect);
    kt.conv_fwd(padded.ptr(), hp, wp, k.plane(n, c), 1, 1, ks, ks, 1, 1, out.plane(n, c),
                x.shape.h, x.shape.w);
  });
  out.ensure_finite("dynamic_filter");
  return out;
}

template <typename T>
void dynamic_filter_backward(const Tensor<T>& x, const Tensor<T>& k, const Tensor<T>& gy,
                             Tensor<T>* gx, Tensor<T>* gk) {
  const int ks = static_cast<int>(k.shape.h);
  const int pad = (ks - 1) / 2;
  const index_t hp = x.shape.h + 2 * pad;
  const index_t wp = x.shape.w + 2 * pad;
  const auto& kt = kern::tbl<T>();
  for (index_t n = 0; n < x.shape.n; ++n) {
    for (index_t c = 0; c < x.shape.c; ++c) {
      if (gk) {
        Tensor<T> padded({1, 1, hp, wp});
        pad_plane(x.plane(n, c), x.shape.h, x.shape.w, padded.ptr(), pad, PadMode::reflect);
        kt.conv_bwd_w(padded.ptr(), hp, wp, gk->plane(n, c), 1, 1, ks, ks, 1, 1,
                      gy.plane(n, c), x.shape.h, x.shape.w);
      }
      if (gx) {
        Tensor<T> gpad({1, 1, hp, wp});
        kt.conv_bwd_in(gpad.ptr(), hp, wp, k.plane(n, c), 1, 1, ks, ks, 1, 1,
                       gy.plane(n, c), x.shape.h, x.shape.w);
        pad_plane_adjoint(gpad.ptr(), x.shape.h, x.shape.w, gx->plane(n, c), pad,
                          PadMode::reflect);
      }
    }
  }
}

// ---- structure --------------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) shape_error("concat: no inputs");
  index_t total_c = 0;
  const Shape& first = parts[0]->shape;
  for (const auto* p : parts) {
    if (p->shape.n != first.n || p->shape.h != first.h || p->shape.w != first.w)
      shape_error("concat: inconsistent shapes " + first.str() + " vs " + p->shape.str());
    total_c += p->shape.c;
  }
  Tensor<T> out({first.n, total_c, first.h, first.w});
  const index_t plane = first.h * first.w;
  for (index_t n = 0; n < first.n; ++n) {
    index_t co = 0;
    for (const auto* p : parts) {
      std::memcpy(out.plane(n, co), p->plane(n, 0),
                  sizeof(T) * static_cast<std::size_t>(p->shape.c * plane));
      co += p->shape.c;
    }
  }
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, index_t c0, index_t c1) {
  if (c0 < 0 || c1 > x.shape.c || c0 >= c1)
    shape_error("slice: channel range [" + std::to_string(c0) + "," + std::to_string(c1) +
                ") invalid for " + x.shape.str());
  Tensor<T> out({x.shape.n, c1 - c0, x.shape.h, x.shape.w});
  const index_t plane = x.plane_size();
  for (index_t n = 0; n < x.shape.n; ++n)
    std::memcpy(out.plane(n, 0), x.plane(n, c0),
                sizeof(T) * static_cast<std::size_t>((c1 - c0) * plane));
  return out;
}

// ---- elementwise --------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  Tensor<T> out(a.shape);
  kern::tbl<T>().add(out.ptr(), a.ptr(), b.ptr(), a.numel());
  out.ensure_finite("add");
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  Tensor<T> out(a.shape);
  kern::tbl<T>().sub(out.ptr(), a.ptr(), b.ptr(), a.numel());
  out.ensure_finite("sub");
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  Tensor<T> out(x.shape);
  kern::tbl<T>().scale(out.ptr(), x.ptr(), s, x.numel());
  out.ensure_finite("scale");
  return out;
}

namespace {

template <typename T>
void bcast_check(const Shape& a, const Shape& b) {
  auto ok = [](index_t av, index_t bv) { return bv == av || bv == 1; };
  if (!ok(a.n, b.n) || !ok(a.c, b.c) || !ok(a.h, b.h) || !ok(a.w, b.w))
    shape_error("mul: shape " + b.str() + " does not broadcast against " + a.str());
}

}  // namespace

template <typename T>
Tensor<T> mul_bcast(const Tensor<T>& a, const Tensor<T>& b) {
  bcast_check<T>(a.shape, b.shape);
  Tensor<T> out(a.shape);
  MacMeter::charge(static_cast<std::uint64_t>(a.numel()));
  if (a.shape == b.shape) {
    kern::tbl<T>().mul(out.ptr(), a.ptr(), b.ptr(), a.numel());
  } else {
    const Shape& s = a.shape;
    const Shape& t = b.shape;
    for (index_t n = 0; n < s.n; ++n)
      for (index_t c = 0; c < s.c; ++c) {
        const index_t bn = t.n == 1 ? 0 : n;
        const index_t bc = t.c == 1 ? 0 : c;
        const T* ap = a.plane(n, c);
        const T* bp = b.plane(bn, bc);
        T* op = out.plane(n, c);
        if (t.h == s.h && t.w == s.w) {
          kern::tbl<T>().mul(op, ap, bp, s.h * s.w);
        } else if (t.h == 1 && t.w == 1) {
          kern::tbl<T>().scale(op, ap, bp[0], s.h * s.w);
        } else {
          for (index_t y = 0; y < s.h; ++y)
            for (index_t x = 0; x < s.w; ++x)
              op[y * s.w + x] =
                  ap[y * s.w + x] * bp[(t.h == 1 ? 0 : y) * t.w + (t.w == 1 ? 0 : x)];
        }
      }
  }
  out.ensure_finite("mul");
  return out;
}

template <typename T>
Tensor<T> reduce_to_shape(const Tensor<T>& g, const Shape& bs) {
  if (g.shape == bs) return g;
  Tensor<T> out(bs);
  const Shape& s = g.shape;
  for (index_t n = 0; n < s.n; ++n)
    for (index_t c = 0; c < s.c; ++c) {
      const index_t bn = bs.n == 1 ? 0 : n;
      const index_t bc = bs.c == 1 ? 0 : c;
      const T* gp = g.plane(n, c);
      T* op = out.plane(bn, bc);
      for (index_t y = 0; y < s.h; ++y)
        for (index_t x = 0; x < s.w; ++x)
          op[(bs.h == 1 ? 0 : y) * bs.w + (bs.w == 1 ? 0 : x)] += gp[y * s.w + x];
    }
  return out;
}

// ---- explicit instantiations -----------------------------------------------------

#define CASDYF_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> pad2d<T>(const Tensor<T>&, int, PadMode);                             \
  template Tensor<T> pad2d_adjoint<T>(const Tensor<T>&, int, PadMode, index_t, index_t);   \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*,       \
                               const Conv2dSpec&);                                         \
  template void conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Conv2dSpec&,  \
                                   const Tensor<T>&, Tensor<T>*, Tensor<T>*, Tensor<T>*);  \
  template Tensor<T> batch_norm_train<T>(const Tensor<T>&, const Tensor<T>&,               \
                                         const Tensor<T>&, Tensor<T>&, Tensor<T>&, double, \
                                         double, BnCache<T>*);                             \
  template Tensor<T> batch_norm_eval<T>(const Tensor<T>&, const Tensor<T>&,                \
                                        const Tensor<T>&, const Tensor<T>&,                \
                                        const Tensor<T>&, double, BnCache<T>*);            \
  template void batch_norm_backward_train<T>(const Tensor<T>&, const Tensor<T>&,           \
                                             const BnCache<T>&, const Tensor<T>&,          \
                                             Tensor<T>*, Tensor<T>*, Tensor<T>*);          \
  template void batch_norm_backward_eval<T>(const Tensor<T>&, const Tensor<T>&,            \
                                            const BnCache<T>&, const Tensor<T>&,           \
                                            Tensor<T>*, Tensor<T>*, Tensor<T>*);           \
  template Tensor<T> relu<T>(const Tensor<T>&);                                            \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                         \
  template Tensor<T> softmax_groups<T>(const Tensor<T>&, index_t);                         \
  template void softmax_groups_backward<T>(const Tensor<T>&, index_t, const Tensor<T>&,    \
                                           Tensor<T>*);                                    \
  template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                                 \
  template Tensor<T> channel_mean<T>(const Tensor<T>&);                                    \
  template Tensor<T> resize_half<T>(const Tensor<T>&);                                     \
  template Tensor<T> resize_half_backward<T>(const Tensor<T>&, const Shape&);              \
  template Tensor<T> resize_double<T>(const Tensor<T>&);                                   \
  template Tensor<T> resize_double_backward<T>(const Tensor<T>&, const Shape&);            \
  template Tensor<T> dynamic_filter<T>(const Tensor<T>&, const Tensor<T>&);                \
  template void dynamic_filter_backward<T>(const Tensor<T>&, const Tensor<T>&,             \
                                           const Tensor<T>&, Tensor<T>*, Tensor<T>*);      \
  template Tensor<T> concat_channels<T>(const std::vector<const Tensor<T>*>&);             \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, index_t, index_t);                \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                        \
  template Tensor<T> mul_bcast<T>(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> reduce_to_shape<T>(const Tensor<T>&, const Shape&);

CASDYF_INSTANTIATE_OPS(float)
CASDYF_INSTANTIATE_OPS(double)

}  // namespace casdyf::ops
