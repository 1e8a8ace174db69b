// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// The 3-scale U-shaped dehazing network built from cascaded
// dynamic-filter blocks: stem conv, two encoder stages with
// downsampling, a bottleneck fed by the quarter-scale input, mirrored
// decoders with additive skips, and reconstruction heads at scales
// 1, 1/2, 1/4 that predict corrections to the resized hazy input.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "casdyf/dfs.hpp"
#include "casdyf/fusion.hpp"
#include "casdyf/rmb.hpp"

namespace casdyf {

struct ModelConfig {
  index_t base_channels = 32;                    // C; stages run C, 2C, 4C
  index_t branches = 4;                          // n, divides every stage width
  std::array<index_t, 5> blocks{1, 1, 2, 1, 1};  // [enc1, enc2, bottleneck, dec2, dec1]
  index_t rmb_per_branch = 2;                    // m
  std::array<int, 3> dilations{1, 3, 5};
  int kernel = 3;                                // dynamic filter size
  BranchStrategy strategy = BranchStrategy::dynamic;
  RefineKind refine = RefineKind::rmb;
  bool rmb_on_last_branch = false;               // ablation: refine the final branch too
  bool rmb_parallel_taps = false;                // ablation: parallel taps inside the RMB
  bool global_residual = true;                   // heads add the resized hazy input

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

template <typename T>
struct CasDyFBlock {
  Cascade<T> cascade;
  std::vector<RefineStack<T>> refine;      // per branch
  std::vector<LocalFusion<T>> local;       // per branch
  GlobalFusion<T> global;
  std::vector<ConvBlock<T>> res_proj;      // resolution strategy: per-branch 1x1
  ModelConfig cfg;
  index_t channels = 0;

  static CasDyFBlock make(ParamStore<T>& store, const std::string& prefix, index_t channels,
                          const ModelConfig& cfg);
  ad::Value<T> forward(const ad::Value<T>& x, Mode mode) const;

 private:
  std::vector<ad::Value<T>> make_branches(const ad::Value<T>& x, Mode mode) const;
};

template <typename T>
class Model {
 public:
  struct Outputs {
    ad::Value<T> full, half, quarter;
  };

  Model(const ModelConfig& cfg, std::uint64_t seed);

  // hazy: (N,3,H,W), H and W divisible by 4
  Outputs forward(const ad::Value<T>& hazy, Mode mode) const;
  Outputs forward(const Tensor<T>& hazy, Mode mode) const;
  Tensor<T> infer(const Tensor<T>& hazy) const;  // eval forward, full scale only

  ParamStore<T>& store() { return store_; }
  const ParamStore<T>& store() const { return store_; }
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  ParamStore<T> store_;
  ConvBlock<T> stem_;
  std::vector<CasDyFBlock<T>> enc1_, enc2_, bottleneck_, dec2_, dec1_;
  Downsample<T> down1_, down2_;
  Upsample<T> up1_, up2_;
  ConvBlock<T> inject_half_, inject_quarter_;
  ConvBlock<T> head_full_, head_half_, head_quarter_;
};

}  // namespace casdyf
