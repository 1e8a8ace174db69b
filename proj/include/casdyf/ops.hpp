// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward numeric kernels and their explicit backward rules. These are
// pure tensor-in/tensor-out functions; the autodiff layer records them
// on a tape. Every output is checked finite before it is returned.
#pragma once

#include <optional>
#include <type_traits>
#include <vector>

#include "casdyf/tensor.hpp"

namespace casdyf::ops {

enum class PadMode { zero, reflect };

struct Conv2dSpec {
  int stride = 1;
  int dilation = 1;
  int groups = 1;
  PadMode pad_mode = PadMode::reflect;
  int pad = 0;
};

// Multiply-accumulate meter for cost accounting. Enabled around an
// instrumented forward pass; ops add their MAC counts while active.
// Counting rules: convolutions and gating multiplies count one MAC per
// multiply; batch norm counts one MAC per element (fused scale+shift);
// bilinear resize counts 4 per output element; pure additions,
// reductions without multiplies, and transcendental activations count
// zero.
class MacMeter {
 public:
  static void enable() { count_ref() = 0; active_ref() = true; }
  static std::uint64_t disable() { active_ref() = false; return count_ref(); }
  static std::uint64_t value() { return count_ref(); }
  static bool active() { return active_ref(); }
  static void charge(std::uint64_t macs) { if (active_ref()) count_ref() += macs; }

 private:
  static bool& active_ref();
  static std::uint64_t& count_ref();
};

// ---- padding -------------------------------------------------------------

// Pads every (n,c) plane by `pad` on all sides. Reflect uses mirror
// indexing without repeating the border row; requires pad <= dim-1.
template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, int pad, PadMode mode);

// Adjoint of pad2d: folds gradients on padded positions back onto their
// source pixels. g has the padded shape; returns the unpadded gradient.
template <typename T>
Tensor<T> pad2d_adjoint(const Tensor<T>& g, int pad, PadMode mode, index_t h, index_t w);

// ---- convolution ----------------------------------------------------------

// weight layout (Cout, Cin/groups, k, k); bias, when present, (1,Cout,1,1)
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w,
                 const std::type_identity_t<Tensor<T>>* bias,
                 const Conv2dSpec& spec);

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Conv2dSpec& spec,
                     const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb);

// ---- batch norm ------------------------------------------------------------

template <typename T>
struct BnCache {
  std::vector<T> mean;     // per channel
  std::vector<T> inv_std;  // per channel (batch stats in train, running in eval)
};

// gamma/beta/running_* are (1,C,1,1). Train mode normalizes with batch
// statistics and updates the running buffers in place (unbiased variance
// in the running estimate); requires N*H*W >= 2.
template <typename T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                           Tensor<T>& running_mean, Tensor<T>& running_var, double momentum,
                           double eps, std::type_identity_t<BnCache<T>>* cache);

template <typename T>
Tensor<T> batch_norm_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                          const Tensor<T>& running_mean, const Tensor<T>& running_var,
                          double eps, std::type_identity_t<BnCache<T>>* cache);

template <typename T>
void batch_norm_backward_train(const Tensor<T>& x, const Tensor<T>& gamma,
                               const BnCache<T>& cache, const Tensor<T>& gy, Tensor<T>* gx,
                               Tensor<T>* ggamma, Tensor<T>* gbeta);

template <typename T>
void batch_norm_backward_eval(const Tensor<T>& x, const Tensor<T>& gamma,
                              const BnCache<T>& cache, const Tensor<T>& gy, Tensor<T>* gx,
                              Tensor<T>* ggamma, Tensor<T>* gbeta);

// ---- pointwise and reductions ----------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

// softmax over contiguous channel groups of size `group`; applied
// independently at every (n, y, x) position. Stabilized by max
// subtraction; each group sums to 1.
template <typename T>
Tensor<T> softmax_groups(const Tensor<T>& x, index_t group);
template <typename T>
void softmax_groups_backward(const Tensor<T>& y, index_t group, const Tensor<T>& gy,
                             Tensor<T>* gx);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);  // (N,C,1,1)

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x);  // (N,1,H,W)

// ---- resize (bilinear, align-corners false) --------------------------------

template <typename T>
Tensor<T> resize_half(const Tensor<T>& x);  // even H,W required
template <typename T>
Tensor<T> resize_half_backward(const Tensor<T>& gy, const Shape& in_shape);
template <typename T>
Tensor<T> resize_double(const Tensor<T>& x);
template <typename T>
Tensor<T> resize_double_backward(const Tensor<T>& gy, const Shape& in_shape);

// ---- dynamic (per-sample, per-channel) filtering ----------------------------

// k: (N, C, kh, kw) one kernel per (sample, channel); reflect padding
// keeps the output the same shape as x.
template <typename T>
Tensor<T> dynamic_filter(const Tensor<T>& x, const Tensor<T>& k);
template <typename T>
void dynamic_filter_backward(const Tensor<T>& x, const Tensor<T>& k, const Tensor<T>& gy,
                             Tensor<T>* gx, Tensor<T>* gk);

// ---- structure -------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts);
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, index_t c0, index_t c1);

// ---- elementwise on tensors --------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s);

// b broadcasts against a: every dim of b equals a's or 1
template <typename T>
Tensor<T> mul_bcast(const Tensor<T>& a, const Tensor<T>& b);
// reduces g (shape of a) onto shape bs by summing broadcast dims
template <typename T>
Tensor<T> reduce_to_shape(const Tensor<T>& g, const Shape& bs);

}  // namespace casdyf::ops
