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

#ifndef VITSLIM_QLINEAR_HPP_
#define VITSLIM_QLINEAR_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vitslim/tensor.hpp"

namespace vitslim {

inline constexpr int kQuantMax = 127;

/// round-half-away-from-zero(value / scale), clamped to [-127, 127]. The
/// division is carried out in double so ties are decided on the exact
/// quotient of the two floats.
std::int8_t quantize_value(float value, float scale) noexcept;

struct QuantParams {
  std::vector<float> weight_scales;  // one per output channel: w ~= q * scale
  std::vector<float> eq_scales;      // one per input channel, folded into the weights
  float act_scale = 1.0f;            // static per-tensor activation scale
  float alpha = 0.0f;                // equalization exponent picked by the search
  bool dynamic_activation = false;   // recompute act_scale from each input instead

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

/// INT8 weights (symmetric, -128 unused) plus F32 bias and scales.
struct QuantizedLinear {
  Tensor q_weight;  // i8 [out, in], already multiplied by diag(eq_scales)
  Tensor bias;      // f32 [out]
  QuantParams params;

  std::size_t out_features() const { return q_weight.dim(0); }
  std::size_t in_features() const { return q_weight.dim(1); }

  /// Payload plus the auxiliary scale tensors as they are stored on disk.
  std::size_t byte_size() const;
};

struct PerChannelQuant {
  Tensor q;                   // i8, same shape as the input
  std::vector<float> scales;  // one per row
};

/// Symmetric per-row quantization: scale = max|row| / 127 (1 for an all-zero
/// row). Rejects non-F32 or non-finite input.
PerChannelQuant quantize_tensor_per_channel(const Tensor& w);

/// q * scale per row, back to F32.
Tensor dequantize_per_channel(const Tensor& q, const std::vector<float>& scales);

/// x / eq_scales -> int8 with act_scale -> int32 GEMM -> * (w_scale * act_scale) + bias.
Tensor qlinear_forward(const QuantizedLinear& layer, const Tensor& x);

}  // namespace vitslim

#endif  // VITSLIM_QLINEAR_HPP_
