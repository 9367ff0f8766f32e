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

#include "vitslim/qlinear.hpp"

#include <algorithm>
#include <cmath>

#include "vitslim/error.hpp"

namespace vitslim {

std::int8_t quantize_value(float value, float scale) noexcept {
  const double r = std::round(static_cast<double>(value) / static_cast<double>(scale));
  return static_cast<std::int8_t>(std::clamp(r, -double{kQuantMax}, double{kQuantMax}));
}

std::size_t QuantizedLinear::byte_size() const {
  // weight_scales, eq_scales, act_scale and alpha are stored as f32 tensors.
  const std::size_t aux = (params.weight_scales.size() + params.eq_scales.size() + 2) * 4;
  return q_weight.byte_size() + bias.byte_size() + aux;
}

PerChannelQuant quantize_tensor_per_channel(const Tensor& w) {
  if (w.rank() != 2) fail(ErrorKind::kDimension, "per-channel quantization expects a 2-D weight");
  if (w.dtype() != Dtype::kF32) {
    fail(ErrorKind::kPrecisionState, "per-channel quantization expects f32 weights");
  }
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  auto src = w.f32();
  PerChannelQuant out{Tensor(w.shape(), Dtype::kI8), std::vector<float>(rows, 1.0f)};
  auto dst = out.q.i8();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = src.data() + r * cols;
    float max_abs = 0.0f;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!std::isfinite(row[c])) {
        fail(ErrorKind::kInput, "non-finite weight at row " + std::to_string(r) + ", column " +
                                    std::to_string(c));
      }
      max_abs = std::max(max_abs, std::fabs(row[c]));
    }
    const float scale = max_abs > 0.0f ? max_abs / static_cast<float>(kQuantMax) : 1.0f;
    out.scales[r] = scale;
    for (std::size_t c = 0; c < cols; ++c) dst[r * cols + c] = quantize_value(row[c], scale);
  }
  return out;
}

Tensor dequantize_per_channel(const Tensor& q, const std::vector<float>& scales) {
  if (q.rank() != 2 || q.dim(0) != scales.size()) {
    fail(ErrorKind::kDimension, "scale count does not match quantized rows");
  }
  const std::size_t rows = q.dim(0), cols = q.dim(1);
  auto src = q.i8();
  std::vector<float> out(src.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = static_cast<float>(src[r * cols + c]) * scales[r];
    }
  }
  return Tensor::from_f32(q.shape(), std::move(out));
}

Tensor qlinear_forward(const QuantizedLinear& layer, const Tensor& x) {
  const std::size_t in_f = layer.in_features(), out_f = layer.out_features();
  if (x.empty() || x.shape().back() != in_f) {
    fail(ErrorKind::kDimension, "quantized linear input " + shape_string(x.shape()) +
                                    " does not match in_features " + std::to_string(in_f));
  }
  const QuantParams& p = layer.params;
  if (p.eq_scales.size() != in_f || p.weight_scales.size() != out_f) {
    fail(ErrorKind::kInvariant, "quantization parameters do not match layer shape");
  }
  const Tensor xf = as_f32(x);
  auto xv = xf.f32();
  const std::size_t rows = xv.size() / in_f;

  std::vector<float> scaled(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < in_f; ++c) scaled[r * in_f + c] = xv[r * in_f + c] / p.eq_scales[c];
  }
  float act_scale = p.act_scale;
  if (p.dynamic_activation) {
    float max_abs = 0.0f;
    for (float v : scaled) max_abs = std::max(max_abs, std::fabs(v));
    act_scale = max_abs > 0.0f ? max_abs / static_cast<float>(kQuantMax) : 1.0f;
  }

  std::vector<std::int32_t> qx(scaled.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) qx[i] = quantize_value(scaled[i], act_scale);

  // Transposed weights, [in, out], so the inner loop runs over outputs.
  auto qw = layer.q_weight.i8();
  std::vector<std::int32_t> wt(in_f * out_f);
  for (std::size_t o = 0; o < out_f; ++o) {
    for (std::size_t c = 0; c < in_f; ++c) wt[c * out_f + o] = qw[o * in_f + c];
  }
  std::vector<float> combined(out_f);
  for (std::size_t o = 0; o < out_f; ++o) combined[o] = p.weight_scales[o] * act_scale;
  auto bias = layer.bias.f32();

  std::vector<float> out(rows * out_f);
  std::vector<std::int32_t> acc(out_f);
  for (std::size_t r = 0; r < rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0);
    const std::int32_t* xrow = qx.data() + r * in_f;
    for (std::size_t c = 0; c < in_f; ++c) {
      const std::int32_t xc = xrow[c];
      const std::int32_t* wrow = wt.data() + c * out_f;
      for (std::size_t o = 0; o < out_f; ++o) acc[o] += xc * wrow[o];
    }
    float* dst = out.data() + r * out_f;
    for (std::size_t o = 0; o < out_f; ++o) dst[o] = static_cast<float>(acc[o]) * combined[o] + bias[o];
  }
  Shape shape = x.shape();
  shape.back() = out_f;
  return Tensor::from_f32(std::move(shape), std::move(out));
}

}  // namespace vitslim
