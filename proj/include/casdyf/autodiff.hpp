// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation. Every operation appends a node with an
// explicit backward rule; nodes carry a global sequence number, and
// backward() replays the recorded tape in reverse order from the root.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <type_traits>
#include <vector>

#include "casdyf/ops.hpp"
#include "casdyf/tensor.hpp"

namespace casdyf::ad {

template <typename T>
struct Node {
  Tensor<T> val;
  Tensor<T> grad;  // allocated on first use, shape of val
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward;

  Tensor<T>& ensure_grad() {
    if (grad.empty() && val.numel() > 0) grad = Tensor<T>(val.shape);
    return grad;
  }
  void zero_grad() {
    if (!grad.empty()) grad.fill(T(0));
  }
};

std::uint64_t next_seq();

// Shared handle to a tape node.
template <typename T>
class Value {
 public:
  Value() = default;
  explicit Value(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& val() const { return node_->val; }
  Tensor<T>& val() { return node_->val; }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& grad() { return node_->ensure_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad() { if (node_) node_->zero_grad(); }
  const Shape& shape() const { return node_->val.shape; }
  std::shared_ptr<Node<T>> node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Value<T> leaf(Tensor<T> v, bool requires_grad = false);

// Accumulates d(sum(root * seed))/d(leaf) into every reachable grad slot.
template <typename T>
void backward(const Value<T>& root, const Tensor<T>& seed);

// seed of ones; for scalar roots this is dL/dx
template <typename T>
void backward(const Value<T>& root);

// ---- recorded operations ----------------------------------------------------

template <typename T>
Value<T> conv2d(const Value<T>& x, const Value<T>& w,
                const std::optional<std::type_identity_t<Value<T>>>& b,
                const ops::Conv2dSpec& spec);

// train mode updates running stats on rm/rv in place
template <typename T>
Value<T> batch_norm(const Value<T>& x, const Value<T>& gamma, const Value<T>& beta,
                    Value<T>& rm, Value<T>& rv, bool train, double momentum, double eps);

template <typename T>
Value<T> relu(const Value<T>& x);
template <typename T>
Value<T> sigmoid(const Value<T>& x);
template <typename T>
Value<T> softmax_groups(const Value<T>& x, index_t group);
template <typename T>
Value<T> global_avg_pool(const Value<T>& x);
template <typename T>
Value<T> channel_mean(const Value<T>& x);
template <typename T>
Value<T> resize_half(const Value<T>& x);
template <typename T>
Value<T> resize_double(const Value<T>& x);
template <typename T>
Value<T> dynamic_filter(const Value<T>& x, const Value<T>& k);
template <typename T>
Value<T> add(const Value<T>& a, const Value<T>& b);
template <typename T>
Value<T> sub(const Value<T>& a, const Value<T>& b);
template <typename T>
Value<T> mul(const Value<T>& a, const Value<T>& b);  // b broadcasts against a
template <typename T>
Value<T> scale(const Value<T>& x, double s);
template <typename T>
Value<T> concat(const std::vector<Value<T>>& parts);
template <typename T>
Value<T> slice(const Value<T>& x, index_t c0, index_t c1);
template <typename T>
Value<T> reshape(const Value<T>& x, const Shape& s);

// scalar (1,1,1,1) nodes; their double-precision accumulator is kept on
// the side for exact reporting
template <typename T>
Value<T> sum_abs(const Value<T>& x, double* exact = nullptr);

// L1 distance between the 2-D spectra of x and the constant target,
// taken on real and imaginary parts separately.
template <typename T>
Value<T> spectrum_l1(const Value<T>& x, const Tensor<T>& target, double* exact = nullptr);

}  // namespace casdyf::ad
