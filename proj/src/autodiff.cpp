// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include "casdyf/fft.hpp"
#include "casdyf/kernels.hpp"

namespace casdyf::ad {

std::uint64_t next_seq() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

namespace {

template <typename T>
std::shared_ptr<Node<T>> make_node(Tensor<T> val, std::vector<std::shared_ptr<Node<T>>> parents) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(val);
  n->seq = next_seq();
  for (auto& p : parents)
    if (p && p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  return n;
}

template <typename T>
void accumulate(Node<T>& node, const Tensor<T>& g) {
  Tensor<T>& slot = node.ensure_grad();
  kern::tbl<T>().add(slot.ptr(), slot.ptr(), g.ptr(), g.numel());
}

}  // namespace

template <typename T>
Value<T> leaf(Tensor<T> v, bool requires_grad) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(v);
  n->requires_grad = requires_grad;
  n->seq = next_seq();
  return Value<T>(n);
}

template <typename T>
void backward(const Value<T>& root, const Tensor<T>& seed) {
  if (!root.defined()) shape_error("backward: undefined root");
  if (!(seed.shape == root.shape()))
    shape_error("backward: seed shape " + seed.shape.str() + " != root " +
                root.shape().str());
  // collect reachable nodes, then replay the tape in reverse seq order
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents)
      if (p && p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });
  accumulate(*root.node(), seed);
  for (Node<T>* n : order)
    if (n->backward && n->requires_grad && !n->grad.empty()) n->backward(*n);
}

template <typename T>
void backward(const Value<T>& root) {
  backward(root, Tensor<T>(root.shape(), T(1)));
}

// ---- op wrappers -------------------------------------------------------------

template <typename T>
Value<T> conv2d(const Value<T>& x, const Value<T>& w,
                const std::optional<std::type_identity_t<Value<T>>>& b,
                const ops::Conv2dSpec& spec) {
  const Tensor<T>* bias = b ? &b->val() : nullptr;
  auto node = make_node(ops::conv2d(x.val(), w.val(), bias, spec),
                        b ? std::vector{x.node(), w.node(), b->node()}
                          : std::vector{x.node(), w.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    auto wn = w.node();
    auto bn = b ? b->node() : nullptr;
    node->backward = [xn, wn, bn, spec](Node<T>& self) {
      Tensor<T>* gx = xn->requires_grad ? &xn->ensure_grad() : nullptr;
      Tensor<T>* gw = wn->requires_grad ? &wn->ensure_grad() : nullptr;
      Tensor<T>* gb = (bn && bn->requires_grad) ? &bn->ensure_grad() : nullptr;
      ops::conv2d_backward(xn->val, wn->val, spec, self.grad, gx, gw, gb);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> batch_norm(const Value<T>& x, const Value<T>& gamma, const Value<T>& beta,
                    Value<T>& rm, Value<T>& rv, bool train, double momentum, double eps) {
  auto cache = std::make_shared<ops::BnCache<T>>();
  Tensor<T> out =
      train ? ops::batch_norm_train(x.val(), gamma.val(), beta.val(), rm.val(), rv.val(),
                                    momentum, eps, cache.get())
            : ops::batch_norm_eval(x.val(), gamma.val(), beta.val(), rm.val(), rv.val(), eps,
                                   cache.get());
  auto node = make_node(std::move(out), std::vector{x.node(), gamma.node(), beta.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    node->backward = [xn, gn, bn, cache, train](Node<T>& self) {
      Tensor<T>* gx = xn->requires_grad ? &xn->ensure_grad() : nullptr;
      Tensor<T>* gg = gn->requires_grad ? &gn->ensure_grad() : nullptr;
      Tensor<T>* gb = bn->requires_grad ? &bn->ensure_grad() : nullptr;
      if (train)
        ops::batch_norm_backward_train(xn->val, gn->val, *cache, self.grad, gx, gg, gb);
      else
        ops::batch_norm_backward_eval(xn->val, gn->val, *cache, self.grad, gx, gg, gb);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> relu(const Value<T>& x) {
  auto node = make_node(ops::relu(x.val()), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      kern::tbl<T>().relu_bwd(xn->ensure_grad().ptr(), xn->val.ptr(), self.grad.ptr(),
                              self.val.numel());
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> sigmoid(const Value<T>& x) {
  auto node = make_node(ops::sigmoid(x.val()), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      Tensor<T>& gx = xn->ensure_grad();
      const index_t n = self.val.numel();
      for (index_t i = 0; i < n; ++i) {
        const T s = self.val.data[static_cast<std::size_t>(i)];
        gx.data[static_cast<std::size_t>(i)] +=
            self.grad.data[static_cast<std::size_t>(i)] * s * (T(1) - s);
      }
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> softmax_groups(const Value<T>& x, index_t group) {
  auto node = make_node(ops::softmax_groups(x.val(), group), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn, group](Node<T>& self) {
      ops::softmax_groups_backward(self.val, group, self.grad, &xn->ensure_grad());
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> global_avg_pool(const Value<T>& x) {
  auto node = make_node(ops::global_avg_pool(x.val()), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      Tensor<T>& gx = xn->ensure_grad();
      const index_t plane = gx.plane_size();
      const T inv = T(1) / static_cast<T>(plane);
      for (index_t n = 0; n < gx.shape.n; ++n)
        for (index_t c = 0; c < gx.shape.c; ++c) {
          const T g = self.grad.at(n, c, 0, 0) * inv;
          T* p = gx.plane(n, c);
          for (index_t i = 0; i < plane; ++i) p[i] += g;
        }
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> channel_mean(const Value<T>& x) {
  auto node = make_node(ops::channel_mean(x.val()), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      Tensor<T>& gx = xn->ensure_grad();
      const index_t plane = gx.plane_size();
      const T inv = T(1) / static_cast<T>(gx.shape.c);
      for (index_t n = 0; n < gx.shape.n; ++n)
        for (index_t c = 0; c < gx.shape.c; ++c)
          kern::tbl<T>().axpy(gx.plane(n, c), self.grad.plane(n, 0), inv, plane);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> resize_half(const Value<T>& x) {
  auto node = make_node(ops::resize_half(x.val()), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      Tensor<T> g = ops::resize_half_backward(self.grad, xn->val.shape);
      accumulate(*xn, g);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> resize_double(const Value<T>& x) {
  auto node = make_node(ops::resize_double(x.val()), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      Tensor<T> g = ops::resize_double_backward(self.grad, xn->val.shape);
      accumulate(*xn, g);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> dynamic_filter(const Value<T>& x, const Value<T>& k) {
  auto node = make_node(ops::dynamic_filter(x.val(), k.val()), std::vector{x.node(), k.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    auto kn = k.node();
    node->backward = [xn, kn](Node<T>& self) {
      Tensor<T>* gx = xn->requires_grad ? &xn->ensure_grad() : nullptr;
      Tensor<T>* gk = kn->requires_grad ? &kn->ensure_grad() : nullptr;
      ops::dynamic_filter_backward(xn->val, kn->val, self.grad, gx, gk);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> add(const Value<T>& a, const Value<T>& b) {
  auto node = make_node(ops::add(a.val(), b.val()), std::vector{a.node(), b.node()});
  if (node->requires_grad) {
    auto an = a.node();
    auto bn = b.node();
    node->backward = [an, bn](Node<T>& self) {
      if (an->requires_grad) accumulate(*an, self.grad);
      if (bn->requires_grad) accumulate(*bn, self.grad);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> sub(const Value<T>& a, const Value<T>& b) {
  auto node = make_node(ops::sub(a.val(), b.val()), std::vector{a.node(), b.node()});
  if (node->requires_grad) {
    auto an = a.node();
    auto bn = b.node();
    node->backward = [an, bn](Node<T>& self) {
      if (an->requires_grad) accumulate(*an, self.grad);
      if (bn->requires_grad) {
        Tensor<T>& gb = bn->ensure_grad();
        kern::tbl<T>().axpy(gb.ptr(), self.grad.ptr(), T(-1), gb.numel());
      }
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> mul(const Value<T>& a, const Value<T>& b) {
  auto node = make_node(ops::mul_bcast(a.val(), b.val()), std::vector{a.node(), b.node()});
  if (node->requires_grad) {
    auto an = a.node();
    auto bn = b.node();
    node->backward = [an, bn](Node<T>& self) {
      if (an->requires_grad) {
        Tensor<T> ga = ops::mul_bcast(self.grad, bn->val);
        accumulate(*an, ga);
      }
      if (bn->requires_grad) {
        Tensor<T> full = ops::mul_bcast(self.grad, an->val);
        Tensor<T> gb = ops::reduce_to_shape(full, bn->val.shape);
        accumulate(*bn, gb);
      }
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> scale(const Value<T>& x, double s) {
  auto node = make_node(ops::scale(x.val(), static_cast<T>(s)), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn, s](Node<T>& self) {
      kern::tbl<T>().axpy(xn->ensure_grad().ptr(), self.grad.ptr(), static_cast<T>(s),
                          self.grad.numel());
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> concat(const std::vector<Value<T>>& parts) {
  std::vector<const Tensor<T>*> ptrs;
  std::vector<std::shared_ptr<Node<T>>> parents;
  ptrs.reserve(parts.size());
  for (const auto& p : parts) {
    ptrs.push_back(&p.val());
    parents.push_back(p.node());
  }
  auto node = make_node(ops::concat_channels(ptrs), std::move(parents));
  if (node->requires_grad) {
    node->backward = [](Node<T>& self) {
      index_t c0 = 0;
      for (auto& p : self.parents) {
        const index_t pc = p->val.shape.c;
        if (p->requires_grad) {
          Tensor<T> g = ops::slice_channels(self.grad, c0, c0 + pc);
          accumulate(*p, g);
        }
        c0 += pc;
      }
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> slice(const Value<T>& x, index_t c0, index_t c1) {
  auto node = make_node(ops::slice_channels(x.val(), c0, c1), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn, c0, c1](Node<T>& self) {
      Tensor<T>& gx = xn->ensure_grad();
      const index_t plane = gx.plane_size();
      for (index_t n = 0; n < gx.shape.n; ++n)
        kern::tbl<T>().add(gx.plane(n, c0), gx.plane(n, c0), self.grad.plane(n, 0),
                           (c1 - c0) * plane);
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> reshape(const Value<T>& x, const Shape& s) {
  auto node = make_node(x.val().reshaped(s), std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      Tensor<T>& gx = xn->ensure_grad();
      kern::tbl<T>().add(gx.ptr(), gx.ptr(), self.grad.ptr(), gx.numel());
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> sum_abs(const Value<T>& x, double* exact) {
  const double total = kern::tbl<T>().sum_abs(x.val().ptr(), x.val().numel());
  if (exact) *exact = total;
  auto node = make_node(Tensor<T>({1, 1, 1, 1}, static_cast<T>(total)),
                        std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    node->backward = [xn](Node<T>& self) {
      const T g = self.grad.data[0];
      Tensor<T>& gx = xn->ensure_grad();
      const index_t n = gx.numel();
      for (index_t i = 0; i < n; ++i) {
        const T v = xn->val.data[static_cast<std::size_t>(i)];
        if (v > T(0))
          gx.data[static_cast<std::size_t>(i)] += g;
        else if (v < T(0))
          gx.data[static_cast<std::size_t>(i)] -= g;
      }
    };
  }
  return Value<T>(node);
}

template <typename T>
Value<T> spectrum_l1(const Value<T>& x, const Tensor<T>& target, double* exact) {
  check_same_shape(x.val(), target, "spectrum_l1");
  fft::ComplexSpectrum<T> sx = fft::dft2(x.val());
  fft::ComplexSpectrum<T> st = fft::dft2(target);
  const std::size_t total_n = sx.re.size();
  double total = 0.0;
  for (std::size_t i = 0; i < total_n; ++i) {
    total += std::abs(static_cast<double>(sx.re[i]) - static_cast<double>(st.re[i]));
    total += std::abs(static_cast<double>(sx.im[i]) - static_cast<double>(st.im[i]));
  }
  if (exact) *exact = total;
  auto node = make_node(Tensor<T>({1, 1, 1, 1}, static_cast<T>(total)),
                        std::vector{x.node()});
  if (node->requires_grad) {
    auto xn = x.node();
    auto sx_keep = std::make_shared<fft::ComplexSpectrum<T>>(std::move(sx));
    auto st_keep = std::make_shared<fft::ComplexSpectrum<T>>(std::move(st));
    node->backward = [xn, sx_keep, st_keep](Node<T>& self) {
      // d|Re D| uses sign(Re D), likewise Im; pull back through DFT^H
      fft::ComplexSpectrum<T> signs(sx_keep->shape);
      const std::size_t n = signs.re.size();
      for (std::size_t i = 0; i < n; ++i) {
        const T dr = sx_keep->re[i] - st_keep->re[i];
        const T di = sx_keep->im[i] - st_keep->im[i];
        signs.re[i] = dr > T(0) ? T(1) : (dr < T(0) ? T(-1) : T(0));
        signs.im[i] = di > T(0) ? T(1) : (di < T(0) ? T(-1) : T(0));
      }
      Tensor<T> g = fft::dft2_adjoint(signs);
      const T gscale = self.grad.data[0];
      Tensor<T>& gx = xn->ensure_grad();
      kern::tbl<T>().axpy(gx.ptr(), g.ptr(), gscale, gx.numel());
    };
  }
  return Value<T>(node);
}

// ---- explicit instantiations ---------------------------------------------------

#define CASDYF_INSTANTIATE_AD(T)                                                          \
  template struct Node<T>;                                                                \
  template class Value<T>;                                                                \
  template Value<T> leaf<T>(Tensor<T>, bool);                                             \
  template void backward<T>(const Value<T>&, const Tensor<T>&);                           \
  template void backward<T>(const Value<T>&);                                             \
  template Value<T> conv2d<T>(const Value<T>&, const Value<T>&,                           \
                              const std::optional<std::type_identity_t<Value<T>>>&,       \
                              const ops::Conv2dSpec&);                                    \
  template Value<T> batch_norm<T>(const Value<T>&, const Value<T>&, const Value<T>&,      \
                                  Value<T>&, Value<T>&, bool, double, double);            \
  template Value<T> relu<T>(const Value<T>&);                                             \
  template Value<T> sigmoid<T>(const Value<T>&);                                          \
  template Value<T> softmax_groups<T>(const Value<T>&, index_t);                          \
  template Value<T> global_avg_pool<T>(const Value<T>&);                                  \
  template Value<T> channel_mean<T>(const Value<T>&);                                     \
  template Value<T> resize_half<T>(const Value<T>&);                                      \
  template Value<T> resize_double<T>(const Value<T>&);                                    \
  template Value<T> dynamic_filter<T>(const Value<T>&, const Value<T>&);                  \
  template Value<T> add<T>(const Value<T>&, const Value<T>&);                             \
  template Value<T> sub<T>(const Value<T>&, const Value<T>&);                             \
  template Value<T> mul<T>(const Value<T>&, const Value<T>&);                             \
  template Value<T> scale<T>(const Value<T>&, double);                                    \
  template Value<T> concat<T>(const std::vector<Value<T>>&);                              \
  template Value<T> slice<T>(const Value<T>&, index_t, index_t);                          \
  template Value<T> reshape<T>(const Value<T>&, const Shape&);                            \
  template Value<T> sum_abs<T>(const Value<T>&, double*);                                 \
  template Value<T> spectrum_l1<T>(const Value<T>&, const Tensor<T>&, double*);

CASDYF_INSTANTIATE_AD(float)
CASDYF_INSTANTIATE_AD(double)

}  // namespace casdyf::ad
