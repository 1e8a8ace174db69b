// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/loss.hpp"

namespace casdyf {

template <typename T>
LossValue<T> scale_loss(const LossConfig& cfg, const ad::Value<T>& pred,
                        const Tensor<T>& target) {
  if (!(pred.shape() == target.shape))
    shape_error("loss: prediction " + pred.shape().str() + " vs target " +
                target.shape.str());
  if (cfg.lambda < 0) shape_error("loss: lambda must be >= 0");
  const double norm = 1.0 / static_cast<double>(target.numel());
  ad::Value<T> diff = ad::sub(pred, ad::leaf(target, false));
  double spatial_sum = 0.0;
  ad::Value<T> spatial = ad::sum_abs(diff, &spatial_sum);
  double freq_sum = 0.0;
  ad::Value<T> freq = ad::spectrum_l1(pred, target, &freq_sum);
  ad::Value<T> node =
      ad::add(ad::scale(spatial, norm), ad::scale(freq, cfg.lambda * norm));
  LossValue<T> out;
  out.node = node;
  out.spatial = spatial_sum * norm;
  out.freq = cfg.lambda * freq_sum * norm;
  out.total = out.spatial + out.freq;
  return out;
}

template <typename T>
LossValue<T> multiscale_loss(const LossConfig& cfg, const std::array<ad::Value<T>, 3>& preds,
                             const std::array<Tensor<T>, 3>& targets) {
  for (int s = 0; s < 3; ++s)
    if (!(preds[static_cast<std::size_t>(s)].shape() ==
          targets[static_cast<std::size_t>(s)].shape))
      shape_error("loss: shape mismatch at scale " + std::to_string(s + 1) + ": " +
                  preds[static_cast<std::size_t>(s)].shape().str() + " vs " +
                  targets[static_cast<std::size_t>(s)].shape.str());
  LossValue<T> out;
  ad::Value<T> node;
  for (std::size_t s = 0; s < 3; ++s) {
    LossValue<T> part = scale_loss(cfg, preds[s], targets[s]);
    out.spatial += part.spatial;
    out.freq += part.freq;
    node = s == 0 ? part.node : ad::add(node, part.node);
  }
  out.total = out.spatial + out.freq;
  out.node = node;
  return out;
}

template LossValue<float> scale_loss<float>(const LossConfig&, const ad::Value<float>&,
                                            const Tensor<float>&);
template LossValue<double> scale_loss<double>(const LossConfig&, const ad::Value<double>&,
                                              const Tensor<double>&);
template LossValue<float> multiscale_loss<float>(const LossConfig&,
                                                 const std::array<ad::Value<float>, 3>&,
                                                 const std::array<Tensor<float>, 3>&);
template LossValue<double> multiscale_loss<double>(const LossConfig&,
                                                   const std::array<ad::Value<double>, 3>&,
                                                   const std::array<Tensor<double>, 3>&);

}  // namespace casdyf
