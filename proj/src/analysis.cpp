// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

#include "casdyf/fft.hpp"

namespace casdyf {

SpectrumMode spectrum_mode_from_string(const std::string& s) {
  if (s == "single") return SpectrumMode::single;
  if (s == "serial") return SpectrumMode::serial;
  if (s == "parallel") return SpectrumMode::parallel;
  if (s == "taps") return SpectrumMode::taps;
  throw std::invalid_argument("unknown spectrum mode '" + s +
                              "' (single|serial|parallel|taps)");
}

std::string to_string(SpectrumMode m) {
  switch (m) {
    case SpectrumMode::single: return "single";
    case SpectrumMode::serial: return "serial";
    case SpectrumMode::parallel: return "parallel";
    case SpectrumMode::taps: return "taps";
  }
  return "?";
}

std::vector<double> base_kernel(const std::string& tag) {
  if (tag == "avg3") return std::vector<double>(9, 1.0 / 9.0);
  if (tag == "laplacian") return {0, -1, 0, -1, 4, -1, 0, -1, 0};
  throw std::invalid_argument("unknown base kernel '" + tag + "' (avg3|laplacian)");
}

namespace {

// complex spectrum of the dilated kernel on the N x N grid
fft::ComplexSpectrum<double> embedded_spectrum(const std::vector<double>& kernel, int k,
                                               int dilation, int grid) {
  if (k < 1 || static_cast<int>(kernel.size()) != k * k)
    shape_error("spectrum: kernel must be k*k values");
  if (dilation < 1) shape_error("spectrum: dilation must be >= 1");
  const int footprint = dilation * (k - 1) + 1;
  if (footprint > grid)
    shape_error("spectrum: dilated kernel footprint " + std::to_string(footprint) +
                " exceeds grid " + std::to_string(grid));
  Tensor<double> plane({1, 1, grid, grid});
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      plane.at(0, 0, a * dilation, b * dilation) =
          kernel[static_cast<std::size_t>(a * k + b)];
  return fft::dft2(plane);
}

SpectrumReport magnitude_report(const fft::ComplexSpectrum<double>& s, int grid) {
  SpectrumReport r;
  r.grid = grid;
  r.magnitude.resize(static_cast<std::size_t>(grid) * grid);
  for (std::size_t i = 0; i < r.magnitude.size(); ++i)
    r.magnitude[i] = std::hypot(s.re[i], s.im[i]);
  return r;
}

}  // namespace

SpectrumReport kernel_spectrum(const std::vector<double>& kernel, int k, int dilation,
                               int grid) {
  SpectrumReport r = magnitude_report(embedded_spectrum(kernel, k, dilation, grid), grid);
  r.dilations = {dilation};
  r.mode = SpectrumMode::single;
  return r;
}

SpectrumReport composite_spectrum(const std::vector<double>& kernel, int k,
                                  const std::vector<int>& dilations, SpectrumMode mode,
                                  int grid) {
  if (dilations.empty()) shape_error("spectrum: empty dilation list");
  fft::ComplexSpectrum<double> acc({1, 1, grid, grid});
  if (mode == SpectrumMode::taps) {
    // running serial chain, each tap added to the merge
    fft::ComplexSpectrum<double> chain({1, 1, grid, grid});
    bool first = true;
    for (int d : dilations) {
      fft::ComplexSpectrum<double> s = embedded_spectrum(kernel, k, d, grid);
      for (std::size_t i = 0; i < acc.re.size(); ++i) {
        if (first) {
          chain.re[i] = s.re[i];
          chain.im[i] = s.im[i];
        } else {
          const std::complex<double> p = std::complex<double>(chain.re[i], chain.im[i]) *
                                         std::complex<double>(s.re[i], s.im[i]);
          chain.re[i] = p.real();
          chain.im[i] = p.imag();
        }
        acc.re[i] += chain.re[i];
        acc.im[i] += chain.im[i];
      }
      first = false;
    }
  } else {
    bool first = true;
    for (int d : dilations) {
      fft::ComplexSpectrum<double> s = embedded_spectrum(kernel, k, d, grid);
      if (first) {
        acc = std::move(s);
        first = false;
        continue;
      }
      for (std::size_t i = 0; i < acc.re.size(); ++i) {
        if (mode == SpectrumMode::serial) {
          const std::complex<double> p = std::complex<double>(acc.re[i], acc.im[i]) *
                                         std::complex<double>(s.re[i], s.im[i]);
          acc.re[i] = p.real();
          acc.im[i] = p.imag();
        } else {
          acc.re[i] += s.re[i];
          acc.im[i] += s.im[i];
        }
      }
    }
  }
  SpectrumReport r = magnitude_report(acc, grid);
  r.dilations = dilations;
  r.mode = mode;
  return r;
}

index_t distinct_levels(const std::vector<double>& values, double tol) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  index_t levels = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] - sorted[i - 1] > tol) ++levels;
  return levels;
}

void write_spectrum_csv(const std::string& path, const SpectrumReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("spectrum: cannot open '" + path + "'");
  os << "# N=" << report.grid << " mode=" << to_string(report.mode) << "\n";
  const int n = report.grid;
  const int half = n / 2;
  char buf[32];
  // recenter: displayed row r corresponds to frequency (r - half) mod N
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int u = (r - half + n) % n;
      const int v = (c - half + n) % n;
      std::snprintf(buf, sizeof(buf), "%.12g",
                    report.magnitude[static_cast<std::size_t>(u * n + v)]);
      os << buf << (c + 1 < n ? "," : "");
    }
    os << "\n";
  }
}

// ---- ERF ------------------------------------------------------------------------

template <typename T>
Tensor<T> erf_map(const Model<T>& model, const Tensor<T>& input, index_t channel, index_t y,
                  index_t x) {
  ad::Value<T> leaf_in = ad::leaf(input, true);
  typename Model<T>::Outputs out = model.forward(leaf_in, Mode::eval);
  const Shape& os = out.full.shape();
  if (channel < 0 || channel >= os.c || y < 0 || y >= os.h || x < 0 || x >= os.w)
    shape_error("erf: output pixel (" + std::to_string(channel) + "," + std::to_string(y) +
                "," + std::to_string(x) + ") outside " + os.str());
  Tensor<T> seed(os);
  seed.at(0, channel, y, x) = T(1);
  ad::backward(out.full, seed);
  const Tensor<T>& g = leaf_in.grad();
  Tensor<T> map({1, 1, input.shape.h, input.shape.w});
  for (index_t c = 0; c < input.shape.c; ++c) {
    const T* gp = g.plane(0, c);
    T* mp = map.plane(0, 0);
    for (index_t i = 0; i < map.plane_size(); ++i)
      mp[i] += std::abs(gp[i]);
  }
  return map;
}

template <typename T>
Tensor<T> erf_map_average(const Model<T>& model, const Tensor<T>& input, index_t count,
                          std::uint64_t seed) {
  if (count < 1) shape_error("erf: average count must be >= 1");
  Rng rng(seed);
  Tensor<T> acc({1, 1, input.shape.h, input.shape.w});
  for (index_t i = 0; i < count; ++i) {
    const index_t c = static_cast<index_t>(rng.next_below(3));
    const index_t y = static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(input.shape.h)));
    const index_t x = static_cast<index_t>(rng.next_below(static_cast<std::uint64_t>(input.shape.w)));
    Tensor<T> m = erf_map(model, input, c, y, x);
    for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += m.data[k];
  }
  for (auto& v : acc.data) v /= static_cast<T>(count);
  return acc;
}

template <typename T>
double effective_radius(const Tensor<T>& map, index_t cy, index_t cx, double mass) {
  double total = 0.0;
  for (T v : map.data) total += static_cast<double>(v);
  if (total <= 0) return 0.0;
  const index_t h = map.shape.h, w = map.shape.w;
  const index_t rmax = std::max({cy, h - 1 - cy, cx, w - 1 - cx});
  double acc = 0.0;
  for (index_t r = 0; r <= rmax; ++r) {
    double ring = 0.0;
    const index_t y0 = std::max<index_t>(0, cy - r), y1 = std::min(h - 1, cy + r);
    const index_t x0 = std::max<index_t>(0, cx - r), x1 = std::min(w - 1, cx + r);
    for (index_t y = y0; y <= y1; ++y)
      for (index_t x = x0; x <= x1; ++x) {
        const index_t dy = y > cy ? y - cy : cy - y;
        const index_t dx = x > cx ? x - cx : cx - x;
        if (std::max(dy, dx) == r) ring += static_cast<double>(map.at(0, 0, y, x));
      }
    if (acc + ring >= mass * total && ring > 0.0)
      return std::max(0.0, static_cast<double>(r) - 1.0 + (mass * total - acc) / ring);
    acc += ring;
  }
  return static_cast<double>(rmax);
}

template <typename T>
Tensor<T> normalize_erf(const Tensor<T>& map) {
  T mx = T(0);
  for (T v : map.data) mx = std::max(mx, v);
  Tensor<T> out(map.shape);
  if (mx <= T(0)) return out;
  for (std::size_t i = 0; i < map.data.size(); ++i)
    out.data[i] = map.data[i] / mx * T(255);
  return out;
}

// ---- cost accounting ----------------------------------------------------------------

namespace {

struct CostAcc {
  CostReport report;
  CostItem* current = nullptr;

  CostItem& item(const std::string& name) {
    report.items.push_back({name, 0, 0});
    current = &report.items.back();
    return *current;
  }
  void params(index_t p) { current->params += p; }
  void macs(std::uint64_t m) { current->macs += m; }
};

struct Dims {
  index_t n, h, w;
};

// conv with bias; charges params and macs at the output size
void conv_cost(CostAcc& acc, index_t cin, index_t cout, int k, const Dims& d, index_t ho,
               index_t wo, int groups = 1, bool bias = true) {
  const index_t cin_g = cin / groups;
  acc.params(cout * cin_g * k * k + (bias ? cout : 0));
  acc.macs(static_cast<std::uint64_t>(d.n) * cout * cin_g * k * k * ho * wo);
}

void bn_cost(CostAcc& acc, index_t c, const Dims& d, index_t h, index_t w) {
  acc.params(2 * c);  // gamma, beta; running stats are state
  acc.macs(static_cast<std::uint64_t>(d.n) * c * h * w);
}

void gate_mlp_cost(CostAcc& acc, index_t cin, index_t hidden, index_t cout, const Dims& d) {
  // pooled vectors: 1x1 convs at spatial size 1
  conv_cost(acc, cin, hidden, 1, d, 1, 1);
  conv_cost(acc, hidden, cout, 1, d, 1, 1);
}

void rmb_cost(CostAcc& acc, index_t c, const Dims& d, index_t h, index_t w) {
  for (int i = 0; i < 3; ++i) conv_cost(acc, c, c, 3, d, h, w);
  conv_cost(acc, 3 * c, c, 1, d, h, w);
  conv_cost(acc, c, c, 1, d, h, w);
}

void rb_cost(CostAcc& acc, index_t c, const Dims& d, index_t h, index_t w) {
  conv_cost(acc, c, c, 3, d, h, w);
  conv_cost(acc, c, c, 3, d, h, w);
}

void rdb_cost(CostAcc& acc, index_t c, const Dims& d, index_t h, index_t w) {
  conv_cost(acc, c, c, 3, d, h, w);
  conv_cost(acc, 2 * c, c, 3, d, h, w);
  conv_cost(acc, 3 * c, c, 1, d, h, w);
}

void refine_cost(CostAcc& acc, const ModelConfig& cfg, index_t c, const Dims& d, index_t h,
                 index_t w) {
  for (index_t m = 0; m < cfg.rmb_per_branch; ++m) {
    switch (cfg.refine) {
      case RefineKind::rmb: rmb_cost(acc, c, d, h, w); break;
      case RefineKind::rb: rb_cost(acc, c, d, h, w); break;
      case RefineKind::rdb: rdb_cost(acc, c, d, h, w); break;
      case RefineKind::none: break;
    }
  }
}

void block_cost(CostAcc& acc, const ModelConfig& cfg, index_t channels, const Dims& d,
                index_t h, index_t w) {
  const index_t n = cfg.branches;
  const index_t bw = channels / n;
  const index_t k2 = static_cast<index_t>(cfg.kernel) * cfg.kernel;
  // branch creation
  switch (cfg.strategy) {
    case BranchStrategy::dynamic:
      for (index_t i = 1; i < n; ++i) {
        const index_t ci = (n - i + 1) * bw;
        conv_cost(acc, ci, k2 * ci, 1, d, 1, 1, 1, /*bias=*/false);  // generator
        bn_cost(acc, k2 * ci, d, 1, 1);                              // logits BN
        acc.macs(static_cast<std::uint64_t>(d.n) * ci * k2 * h * w); // dynamic filter
        bn_cost(acc, ci, d, h, w);                                   // BN over y
        conv_cost(acc, ci, bw, 1, d, h, w);                          // out projection
        conv_cost(acc, ci, ci - bw, 1, d, h, w);                     // next projection
      }
      break;
    case BranchStrategy::fixed_conv:
      for (index_t i = 1; i < n; ++i) {
        const index_t ci = (n - i + 1) * bw;
        conv_cost(acc, ci, ci, cfg.kernel, d, h, w, static_cast<int>(ci), /*bias=*/false);
        bn_cost(acc, ci, d, h, w);
        conv_cost(acc, ci, bw, 1, d, h, w);
        conv_cost(acc, ci, ci - bw, 1, d, h, w);
      }
      break;
    case BranchStrategy::split:
      break;
    case BranchStrategy::resolution:
      for (index_t i = 0; i < n; ++i) {
        index_t hh = h, ww = w;
        for (index_t s = 0; s < i; ++s) { hh /= 2; ww /= 2; }
        conv_cost(acc, channels, bw, 1, d, hh, ww);
        // doubling back to full resolution
        index_t uh = hh, uw = ww;
        for (index_t s = 0; s < i; ++s) {
          uh *= 2;
          uw *= 2;
          acc.macs(4ULL * static_cast<std::uint64_t>(d.n) * bw * uh * uw);
        }
        // halving the running input for the next branch
        if (i + 1 < n)
          acc.macs(4ULL * static_cast<std::uint64_t>(d.n) * channels * (hh / 2) * (ww / 2));
      }
      break;
  }
  // per-branch refinement (last branch only when configured)
  for (index_t i = 0; i < n; ++i) {
    const bool last = i == n - 1;
    if (!last || cfg.rmb_on_last_branch) refine_cost(acc, cfg, bw, d, h, w);
  }
  // local fusion per branch
  for (index_t i = 0; i < n; ++i) {
    const index_t cat = 3 * bw;
    gate_mlp_cost(acc, cat, std::max<index_t>(1, cat / 4), cat, d);
    acc.macs(static_cast<std::uint64_t>(d.n) * cat * h * w);  // gate multiply
    conv_cost(acc, cat, bw, 1, d, h, w);                      // merge
  }
  // global fusion
  conv_cost(acc, channels, channels, 1, d, h, w);  // entry
  gate_mlp_cost(acc, channels, std::max<index_t>(1, channels / 4), channels, d);
  conv_cost(acc, 1, 1, 7, d, h, w);                // spatial gate conv
  conv_cost(acc, channels, channels, 1, d, h, w);  // pixel gate conv
  acc.macs(3ULL * static_cast<std::uint64_t>(d.n) * channels * h * w);  // three gatings
  conv_cost(acc, channels, channels, 1, d, h, w);  // exit
}

void stage_cost(CostAcc& acc, const ModelConfig& cfg, const std::string& name,
                index_t channels, index_t depth, const Dims& d, index_t h, index_t w) {
  acc.item(name);
  for (index_t i = 0; i < depth; ++i) block_cost(acc, cfg, channels, d, h, w);
}

}  // namespace

std::string CostReport::to_json() const {
  nlohmann::json j;
  j["input"] = {{"batch", batch}, {"height", input_h}, {"width", input_w}};
  nlohmann::json items_json = nlohmann::json::array();
  for (const auto& it : items)
    items_json.push_back(
        {{"name", it.name}, {"params", it.params}, {"macs", it.macs}});
  j["modules"] = items_json;
  j["total_params"] = total_params;
  j["total_macs"] = total_macs;
  j["total_flops"] = total_flops();
  return j.dump(2);
}

CostReport count_params_flops(const ModelConfig& cfg, index_t h, index_t w, index_t batch) {
  cfg.validate();
  if (h % 4 != 0 || w % 4 != 0)
    shape_error("count: H and W must be divisible by 4, got " + std::to_string(h) + "x" +
                std::to_string(w));
  CostAcc acc;
  acc.report.input_h = h;
  acc.report.input_w = w;
  acc.report.batch = batch;
  const index_t c1 = cfg.base_channels, c2 = 2 * c1, c4 = 4 * c1;
  const Dims d{batch, h, w};
  const index_t h2 = h / 2, w2 = w / 2, h4 = h / 4, w4 = w / 4;

  acc.item("inputs");  // the two low-resolution copies of the hazy image
  acc.macs(4ULL * static_cast<std::uint64_t>(batch) * 3 * h2 * w2);
  acc.macs(4ULL * static_cast<std::uint64_t>(batch) * 3 * h4 * w4);

  acc.item("stem");
  conv_cost(acc, 3, c1, 3, d, h, w);
  stage_cost(acc, cfg, "enc1", c1, cfg.blocks[0], d, h, w);
  acc.item("down1");
  conv_cost(acc, c1, c2, 3, d, h2, w2);
  acc.item("inject_half");
  conv_cost(acc, 3, c2, 3, d, h2, w2);
  stage_cost(acc, cfg, "enc2", c2, cfg.blocks[1], d, h2, w2);
  acc.item("down2");
  conv_cost(acc, c2, c4, 3, d, h4, w4);
  acc.item("inject_quarter");
  conv_cost(acc, 3, c4, 3, d, h4, w4);
  stage_cost(acc, cfg, "bottleneck", c4, cfg.blocks[2], d, h4, w4);
  acc.item("up1");
  acc.macs(4ULL * static_cast<std::uint64_t>(batch) * c4 * h2 * w2);
  conv_cost(acc, c4, c2, 3, d, h2, w2);
  stage_cost(acc, cfg, "dec2", c2, cfg.blocks[3], d, h2, w2);
  acc.item("up2");
  acc.macs(4ULL * static_cast<std::uint64_t>(batch) * c2 * h * w);
  conv_cost(acc, c2, c1, 3, d, h, w);
  stage_cost(acc, cfg, "dec1", c1, cfg.blocks[4], d, h, w);
  acc.item("heads");
  conv_cost(acc, c4, 3, 3, d, h4, w4);
  conv_cost(acc, c2, 3, 3, d, h2, w2);
  conv_cost(acc, c1, 3, 3, d, h, w);

  for (const auto& it : acc.report.items) {
    acc.report.total_params += it.params;
    acc.report.total_macs += it.macs;
  }
  return acc.report;
}

template <typename T>
std::uint64_t measure_forward_macs(const Model<T>& model, index_t h, index_t w,
                                   index_t batch) {
  Tensor<T> input({batch, 3, h, w}, T(0.5));
  ops::MacMeter::enable();
  model.forward(input, Mode::eval);
  return ops::MacMeter::disable();
}

#define CASDYF_INSTANTIATE_ANALYSIS(T)                                                     \
  template Tensor<T> erf_map<T>(const Model<T>&, const Tensor<T>&, index_t, index_t,      \
                                index_t);                                                  \
  template Tensor<T> erf_map_average<T>(const Model<T>&, const Tensor<T>&, index_t,       \
                                        std::uint64_t);                                    \
  template double effective_radius<T>(const Tensor<T>&, index_t, index_t, double);       \
  template Tensor<T> normalize_erf<T>(const Tensor<T>&);                                  \
  template std::uint64_t measure_forward_macs<T>(const Model<T>&, index_t, index_t,       \
                                                 index_t);

CASDYF_INSTANTIATE_ANALYSIS(float)
CASDYF_INSTANTIATE_ANALYSIS(double)

}  // namespace casdyf
