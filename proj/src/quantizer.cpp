// Copyright 2026 The vitslim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vitslim/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vitslim/error.hpp"
#include "vitslim/ops.hpp"

namespace vitslim {

std::vector<double> compute_eq_scales(std::span<const double> channel_mean_abs, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorKind::kConfig, "equalization alpha must be in [0, 1], got " + std::to_string(alpha));
  }
  const std::size_t n = channel_mean_abs.size();
  std::vector<double> scales(n, 1.0);
  if (n == 0 || alpha == 0.0) return scales;

  double floor_value = 0.0;
  for (double m : channel_mean_abs) {
    if (m > 0.0 && (floor_value == 0.0 || m < floor_value)) floor_value = m;
  }
  if (floor_value == 0.0) return scales;

  std::vector<double> logs(n);
  double mean_log = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    logs[c] = std::log(std::max(channel_mean_abs[c], floor_value));
    mean_log += logs[c];
  }
  mean_log /= static_cast<double>(n);
  for (std::size_t c = 0; c < n; ++c) scales[c] = std::exp(alpha * (logs[c] - mean_log));
  return scales;
}

namespace {

// Index of the block whose output.dense is `layer`, or npos.
std::size_t output_dense_block(const VitModel& model, std::string_view layer) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (layer == layer_names::output(l)) return l;
  }
  return std::string::npos;
}

std::size_t output_dense_block(std::string_view layer) {
  constexpr std::string_view kPrefix = "encoder.layer.";
  constexpr std::string_view kSuffix = ".output.dense";
  if (!layer.starts_with(kPrefix) || !layer.ends_with(kSuffix)) return std::string::npos;
  const auto digits = layer.substr(kPrefix.size(), layer.size() - kPrefix.size() - kSuffix.size());
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::string::npos;
  }
  return std::stoul(std::string(digits));
}

const std::vector<double>& raw_input_stats(const ActivationStats& stats, std::string_view layer) {
  if (stats.contains(layer) && !stats.at(layer).input_mean_abs.empty()) return stats.at(layer).input_mean_abs;
  const std::size_t block = output_dense_block(layer);
  if (block != std::string::npos) return stats.at(layer_names::intermediate(block)).channel_mean_abs;
  fail(ErrorKind::kLookup, "no input statistics for '" + std::string(layer) + "'");
}

std::vector<float> to_float(const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(v[i]);
    if (!(std::isfinite(out[i]) && out[i] > 0.0f)) {
      fail(ErrorKind::kInvariant, "equalization scale " + std::to_string(v[i]) + " is not representable");
    }
  }
  return out;
}

void require_dense_f32(const Linear& layer) {
  if (layer.is_quantized() || layer.weight.dtype() != Dtype::kF32) {
    fail(ErrorKind::kPrecisionState, "activation-aware quantization expects an f32 layer");
  }
}

}  // namespace

std::vector<double> compute_eq_scales(const ActivationStats& stats, std::string_view layer, double alpha) {
  return compute_eq_scales(raw_input_stats(stats, layer), alpha);
}

std::vector<double> input_importance(const VitModel& model, const ActivationStats& stats,
                                     std::string_view layer) {
  const std::vector<double>& raw = raw_input_stats(stats, layer);
  const std::size_t in_f = model.linear(layer).in_features();
  if (raw.size() == in_f) return raw;
  const std::size_t block = output_dense_block(model, layer);
  if (block == std::string::npos) {
    fail(ErrorKind::kDimension, "input stats for " + std::string(layer) + " have " +
                                    std::to_string(raw.size()) + " channels, layer has " + std::to_string(in_f));
  }
  std::vector<double> mapped;
  mapped.reserve(in_f);
  for (std::size_t id : model.layers[block].channel_ids) {
    if (id >= raw.size()) fail(ErrorKind::kDimension, "input stats do not cover channel " + std::to_string(id));
    mapped.push_back(raw[id]);
  }
  return mapped;
}

QuantizedLinear build_quantized(const Linear& layer, std::span<const float> eq_scales,
                                const Tensor& calib_inputs, bool dynamic_activation) {
  require_dense_f32(layer);
  const std::size_t out_f = layer.out_features(), in_f = layer.in_features();
  if (eq_scales.size() != in_f) fail(ErrorKind::kDimension, "eq_scales do not match in_features");
  if (calib_inputs.empty() || calib_inputs.shape().back() != in_f) {
    fail(ErrorKind::kInput, "calibration inputs do not match the layer");
  }

  auto w = layer.weight.f32();
  std::vector<float> folded(w.size());
  for (std::size_t o = 0; o < out_f; ++o) {
    for (std::size_t c = 0; c < in_f; ++c) folded[o * in_f + c] = w[o * in_f + c] * eq_scales[c];
  }
  PerChannelQuant pc = quantize_tensor_per_channel(Tensor::from_f32({out_f, in_f}, std::move(folded)));

  const Tensor x = as_f32(calib_inputs);
  auto xv = x.f32();
  float max_abs = 0.0f;
  for (std::size_t i = 0; i < xv.size(); ++i) max_abs = std::max(max_abs, std::fabs(xv[i] / eq_scales[i % in_f]));

  QuantizedLinear q;
  q.q_weight = std::move(pc.q);
  q.bias = as_f32(layer.bias);
  q.params.weight_scales = std::move(pc.scales);
  q.params.eq_scales.assign(eq_scales.begin(), eq_scales.end());
  q.params.act_scale = max_abs > 0.0f ? max_abs / static_cast<float>(kQuantMax) : 1.0f;
  q.params.dynamic_activation = dynamic_activation;
  return q;
}

Tensor equalized_forward(const Linear& layer, std::span<const float> eq_scales, const Tensor& x) {
  require_dense_f32(layer);
  const std::size_t out_f = layer.out_features(), in_f = layer.in_features();
  if (eq_scales.size() != in_f) fail(ErrorKind::kDimension, "eq_scales do not match in_features");
  auto w = layer.weight.f32();
  std::vector<float> folded(w.size());
  for (std::size_t o = 0; o < out_f; ++o) {
    for (std::size_t c = 0; c < in_f; ++c) folded[o * in_f + c] = w[o * in_f + c] * eq_scales[c];
  }
  Tensor xs = as_f32(x);
  auto xv = xs.f32();
  for (std::size_t i = 0; i < xv.size(); ++i) xv[i] /= eq_scales[i % in_f];
  return ops::linear(xs, Tensor::from_f32({out_f, in_f}, std::move(folded)), layer.bias);
}

double AwqSearch::selected_mse() const {
  for (std::size_t i = 0; i < kAlphaGrid.size(); ++i) {
    if (kAlphaGrid[i] == alpha) return mse[i];
  }
  fail(ErrorKind::kInvariant, "selected alpha is not on the search grid");
}

AwqResult quantize_layer_awq(const Linear& layer, std::span<const double> input_importance,
                             const Tensor& calib_inputs, bool dynamic_activation) {
  require_dense_f32(layer);
  if (calib_inputs.empty()) fail(ErrorKind::kInput, "no calibration inputs for quantization");
  if (input_importance.size() != layer.in_features()) {
    fail(ErrorKind::kDimension, "input statistics do not match in_features");
  }
  const Tensor reference = ops::linear(calib_inputs, layer.weight, layer.bias);
  auto ref = reference.f32();

  AwqResult best;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < kAlphaGrid.size(); ++i) {
    const auto eq = to_float(compute_eq_scales(input_importance, kAlphaGrid[i]));
    QuantizedLinear candidate = build_quantized(layer, eq, calib_inputs, dynamic_activation);
    candidate.params.alpha = static_cast<float>(kAlphaGrid[i]);
    const Tensor out = qlinear_forward(candidate, calib_inputs);
    auto y = out.f32();
    double sq = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double d = static_cast<double>(y[j]) - static_cast<double>(ref[j]);
      sq += d * d;
    }
    best.search.mse[i] = sq / static_cast<double>(y.size());
    if (i == 0 || best.search.mse[i] < best.search.mse[best_index]) {
      best_index = i;
      best.layer = std::move(candidate);
    }
  }
  best.search.alpha = kAlphaGrid[best_index];
  return best;
}

VitModel quantize_model(const VitModel& model, const ActivationStats& stats, const CalibrationSet& calib,
                        const QuantizeOptions& options, std::vector<AwqSearch>* searches) {
  std::vector<std::string> targets;
  model.for_each_linear([&](const std::string& name, const Linear& lin) {
    if (!matches_any(options.patterns, name)) return;
    if (lin.state() == Dtype::kF16) {
      fail(ErrorKind::kPrecisionState, name + " is f16; INT8 quantization applies to f32 layers only "
                                              "(quantize the pruned f32 model, not the f16 variant)");
    }
    if (lin.state() == Dtype::kI8) fail(ErrorKind::kPrecisionState, name + " is already quantized");
    targets.push_back(name);
  });
  VitModel out = model;
  if (targets.empty()) return out;
  if (calib.size() == 0) fail(ErrorKind::kInput, "calibration set is empty");

  std::map<std::string, Tensor, std::less<>> inputs;
  ObserverSet capture(targets, [&](const LinearObservation& obs) { inputs[std::string(obs.name)] = obs.input; });
  forward(model, calib.images, &capture);

  for (const auto& name : targets) {
    const auto importance = input_importance(model, stats, name);
    AwqResult result = quantize_layer_awq(model.linear(name), importance, inputs.at(name),
                                          options.dynamic_activation);
    result.search.layer = name;
    Linear& lin = out.linear(name);
    lin.weight = Tensor();
    lin.bias = Tensor();
    lin.quantized = std::move(result.layer);
    if (searches) searches->push_back(std::move(result.search));
  }
  return out;
}

}  // namespace vitslim
