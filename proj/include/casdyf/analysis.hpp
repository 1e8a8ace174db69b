// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Analysis procedures behind the CLI: frequency spectra of dilated
// kernels, effective receptive field maps from input gradients, and
// closed-form parameter/MAC accounting that must agree exactly with the
// instrumented forward pass.
#pragma once

#include <string>
#include <vector>

#include "casdyf/model.hpp"

namespace casdyf {

// ---- kernel spectra --------------------------------------------------------

enum class SpectrumMode { single, serial, parallel, taps };

SpectrumMode spectrum_mode_from_string(const std::string& s);
std::string to_string(SpectrumMode m);

struct SpectrumReport {
  int grid = 0;                    // N
  std::vector<double> magnitude;   // N*N, DC at (0,0)
  std::string base;                // kernel tag
  std::vector<int> dilations;
  SpectrumMode mode = SpectrumMode::single;
};

// named 3x3 base kernels: "avg3" (low-pass) and "laplacian" (4-neighbor
// high-pass)
std::vector<double> base_kernel(const std::string& tag);

// kernel zero-embedded with dilation d into an N x N grid, 2-D DFT,
// magnitude
SpectrumReport kernel_spectrum(const std::vector<double>& kernel, int k, int dilation,
                               int grid);

// serial: product of the component complex spectra; parallel: their
// sum; taps: the serial chain merged in parallel (K1 + K1*K2 + ...),
// the response of the multiscale block's actual topology
SpectrumReport composite_spectrum(const std::vector<double>& kernel, int k,
                                  const std::vector<int>& dilations, SpectrumMode mode,
                                  int grid);

// number of distinct magnitude levels up to the given tolerance
index_t distinct_levels(const std::vector<double>& values, double tol = 1e-9);

// CSV emission recenters the DC bin to the grid center; header line
// "# N=<size> mode=<mode>"
void write_spectrum_csv(const std::string& path, const SpectrumReport& report);

// ---- effective receptive field ----------------------------------------------

// |d out.full[0,channel,y,x] / d input|, summed over input channels;
// (1,1,H,W), unnormalized
template <typename T>
Tensor<T> erf_map(const Model<T>& model, const Tensor<T>& input, index_t channel, index_t y,
                  index_t x);

// mean of |gradient| maps over `count` seeded random output pixels
template <typename T>
Tensor<T> erf_map_average(const Model<T>& model, const Tensor<T>& input, index_t count,
                          std::uint64_t seed);

// Chebyshev radius around (cy,cx) holding `mass` of the total, at
// sub-ring resolution: the quantile is interpolated linearly inside the
// ring where the cumulative mass crosses it
template <typename T>
double effective_radius(const Tensor<T>& map, index_t cy, index_t cx, double mass = 0.9);

// max-normalized to [0,255]
template <typename T>
Tensor<T> normalize_erf(const Tensor<T>& map);

// ---- cost accounting -----------------------------------------------------------

struct CostItem {
  std::string name;
  index_t params = 0;
  std::uint64_t macs = 0;
};

struct CostReport {
  std::vector<CostItem> items;
  index_t total_params = 0;
  std::uint64_t total_macs = 0;
  index_t input_h = 0, input_w = 0, batch = 1;

  std::uint64_t total_flops() const { return 2 * total_macs; }
  std::string to_json() const;
};

// Closed-form walk of the architecture at the given input size. MAC
// rules match ops::MacMeter: convolutions and gating multiplies count,
// batch norm counts one per element, bilinear resize counts four per
// output element, additions and activations count zero.
CostReport count_params_flops(const ModelConfig& cfg, index_t h, index_t w, index_t batch = 1);

// instrumented forward pass (eval mode) under the MAC meter
template <typename T>
std::uint64_t measure_forward_macs(const Model<T>& model, index_t h, index_t w,
                                   index_t batch = 1);

}  // namespace casdyf
