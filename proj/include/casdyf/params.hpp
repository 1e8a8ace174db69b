// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Ordered, named parameter storage. Learned entries carry gradient
// slots; state entries (batch-norm running stats) persist but never
// receive gradients. Registration order is the serialization order.
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "casdyf/autodiff.hpp"
#include "casdyf/rng.hpp"
#include "casdyf/tensor.hpp"

namespace casdyf {

enum class Init { kaiming_uniform, zeros, ones };

template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    ad::Value<T> value;
    bool learned = false;
    Init init = Init::zeros;
    index_t fan_in = 0;
  };

  // fan-in-scaled uniform: |w| <= sqrt(6 / fan_in)
  ad::Value<T>& add_param(const std::string& name, const Shape& shape, Init init,
                          index_t fan_in = 0);
  ad::Value<T>& add_state(const std::string& name, const Shape& shape, Init init);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  ad::Value<T>& get(const std::string& name);
  const ad::Value<T>& get(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // deterministic re-initialization: replays every entry's init scheme
  // from a single stream in registration order
  void init_params(std::uint64_t seed);

  void zero_grads();
  // test hook: zero every learned tensor, leave state at init values
  void zero_learned();

  index_t learned_scalar_count() const;
  index_t total_scalar_count() const;

 private:
  ad::Value<T>& add(const std::string& name, const Shape& shape, Init init, index_t fan_in,
                    bool learned);
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <typename T>
void fill_init(Tensor<T>& t, Init init, index_t fan_in, Rng& rng);

}  // namespace casdyf
