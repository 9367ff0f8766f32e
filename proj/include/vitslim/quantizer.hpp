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

#ifndef VITSLIM_QUANTIZER_HPP_
#define VITSLIM_QUANTIZER_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vitslim/model.hpp"
#include "vitslim/profiler.hpp"
#include "vitslim/qlinear.hpp"

namespace vitslim {

/// Equalization exponents tried by the search, ascending.
inline constexpr std::array<double, 11> kAlphaGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                                   0.6, 0.7, 0.8, 0.9, 1.0};

/// eq_c = (m_c / geomean(m))^alpha, evaluated as exp(alpha * (ln m_c - mean ln m)).
/// Zero means are floored to the smallest positive mean; if every mean is
/// zero the result is all ones, as it is for alpha = 0.
std::vector<double> compute_eq_scales(std::span<const double> channel_mean_abs, double alpha);

/// Same, reading the stats of `layer`'s input features: the layer's own
/// input statistics when profiled, otherwise (for output.dense) the output
/// statistics of the producing intermediate.dense.
std::vector<double> compute_eq_scales(const ActivationStats& stats, std::string_view layer, double alpha);

/// Per-input-channel importance for `layer`, mapped onto its current
/// (possibly pruned) input channels. Lookup error if nothing was profiled.
std::vector<double> input_importance(const VitModel& model, const ActivationStats& stats,
                                     std::string_view layer);

/// Folds eq_scales into the columns of an F32 layer, quantizes the result per
/// output channel and derives the static activation scale from the
/// equalized calibration inputs.
QuantizedLinear build_quantized(const Linear& layer, std::span<const float> eq_scales,
                                const Tensor& calib_inputs, bool dynamic_activation = false);

/// (W diag(s)) (diag(1/s) x) + b in F32 with no rounding to INT8: the
/// real-arithmetic identity the equalization relies on.
Tensor equalized_forward(const Linear& layer, std::span<const float> eq_scales, const Tensor& x);

struct AwqSearch {
  std::string layer;
  double alpha = 0.0;
  std::array<double, kAlphaGrid.size()> mse{};  // calibration MSE per grid point

  double selected_mse() const;
  double baseline_mse() const { return mse[0]; }  // alpha = 0: plain per-channel
};

struct AwqResult {
  QuantizedLinear layer;
  AwqSearch search;
};

/// Grid search over kAlphaGrid for the equalization exponent that minimizes
/// the MSE between the quantized and F32 outputs on `calib_inputs`; ties
/// keep the smaller alpha.
AwqResult quantize_layer_awq(const Linear& layer, std::span<const double> input_importance,
                             const Tensor& calib_inputs, bool dynamic_activation = false);

struct QuantizeOptions {
  std::vector<std::string> patterns{"*"};
  bool dynamic_activation = false;
};

/// Replaces every matched F32 linear by its AWQ-quantized form. Inputs for
/// the search are captured from one forward pass of the unquantized model.
/// Matching an F16 or already quantized layer is a precision-state error.
VitModel quantize_model(const VitModel& model, const ActivationStats& stats, const CalibrationSet& calib,
                        const QuantizeOptions& options = {}, std::vector<AwqSearch>* searches = nullptr);

}  // namespace vitslim

#endif  // VITSLIM_QUANTIZER_HPP_
