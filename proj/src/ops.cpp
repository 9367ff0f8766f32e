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

#include "vitslim/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vitslim/error.hpp"

namespace vitslim::ops {
namespace {

std::vector<float> widen(const Tensor& t) {
  switch (t.dtype()) {
    case Dtype::kF32: {
      auto s = t.f32();
      return {s.begin(), s.end()};
    }
    case Dtype::kF16: {
      auto s = t.f16();
      std::vector<float> out(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) out[i] = half_to_float(s[i]);
      return out;
    }
    case Dtype::kI8:
      break;
  }
  fail(ErrorKind::kPrecisionState, "floating-point op received an i8 tensor; use the quantized path");
}

// c[M,N] = a[M,K] * b[K,N]. Loop order i-k-j keeps, for every output element,
// the same sequence of float additions as the textbook i-j-k loop while
// letting the compiler vectorize across j. Rows go four at a time so each row
// of b is loaded once per block.
void gemm_rowmajor(const float* __restrict a, const float* __restrict b, float* __restrict c,
                   std::size_t m, std::size_t k, std::size_t n) {
  std::fill(c, c + m * n, 0.0f);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    float* __restrict c0 = c + i * n;
    float* __restrict c1 = c0 + n;
    float* __restrict c2 = c1 + n;
    float* __restrict c3 = c2 + n;
    const float* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float x0 = a0[p], x1 = a0[k + p], x2 = a0[2 * k + p], x3 = a0[3 * k + p];
      const float* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const float bj = brow[j];
        c0[j] += x0 * bj;
        c1[j] += x1 * bj;
        c2[j] += x2 * bj;
        c3[j] += x3 * bj;
      }
    }
  }
  for (; i < m; ++i) {
    float* __restrict crow = c + i * n;
    const float* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float aip = arow[p];
      const float* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void require_float(const Tensor& t, const char* what) {
  if (t.empty()) fail(ErrorKind::kDimension, std::string(what) + " is empty");
  if (t.dtype() == Dtype::kI8) {
    fail(ErrorKind::kPrecisionState, std::string(what) + " is i8; use the quantized path");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_float(a, "matmul lhs");
  require_float(b, "matmul rhs");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    fail(ErrorKind::kDimension,
         "matmul shape mismatch: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const auto av = widen(a);
  const auto bv = widen(b);
  std::vector<float> out(m * n);
  gemm_rowmajor(av.data(), bv.data(), out.data(), m, k, n);
  return Tensor::from_f32({m, n}, std::move(out));
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_float(x, "linear input");
  require_float(weight, "linear weight");
  require_float(bias, "linear bias");
  if (weight.rank() != 2) fail(ErrorKind::kDimension, "linear weight must be [out, in]");
  const std::size_t out_f = weight.dim(0), in_f = weight.dim(1);
  if (bias.rank() != 1 || bias.dim(0) != out_f) {
    fail(ErrorKind::kDimension, "linear bias " + shape_string(bias.shape()) + " does not match weight " +
                                    shape_string(weight.shape()));
  }
  if (x.shape().back() != in_f) {
    fail(ErrorKind::kDimension, "linear input " + shape_string(x.shape()) + " does not match weight " +
                                    shape_string(weight.shape()));
  }
  const std::size_t rows = x.numel() / in_f;

  const auto wv = widen(weight);
  std::vector<float> wt(in_f * out_f);
  for (std::size_t o = 0; o < out_f; ++o) {
    for (std::size_t i = 0; i < in_f; ++i) wt[i * out_f + o] = wv[o * in_f + i];
  }
  const auto xv = widen(x);
  const auto bv = widen(bias);

  std::vector<float> out(rows * out_f);
  gemm_rowmajor(xv.data(), wt.data(), out.data(), rows, in_f, out_f);
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = out.data() + r * out_f;
    for (std::size_t o = 0; o < out_f; ++o) row[o] += bv[o];
  }
  Shape shape = x.shape();
  shape.back() = out_f;
  return Tensor::from_f32(std::move(shape), std::move(out));
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  if (x.empty()) fail(ErrorKind::kDimension, "layernorm input is empty");
  const std::size_t h = x.shape().back();
  if (gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != h || beta.dim(0) != h) {
    fail(ErrorKind::kDimension, "layernorm parameters do not match hidden size " + std::to_string(h));
  }
  if (gamma.dtype() != Dtype::kF32 || beta.dtype() != Dtype::kF32) {
    fail(ErrorKind::kPrecisionState, "layernorm parameters must stay f32");
  }
  const auto xv = widen(x);
  auto g = gamma.f32();
  auto b = beta.f32();
  const std::size_t rows = xv.size() / h;
  const float inv_h = 1.0f / static_cast<float>(h);

  std::vector<float> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = xv.data() + r * h;
    float sum = 0.0f;
    for (std::size_t i = 0; i < h; ++i) sum += row[i];
    const float mean = sum * inv_h;
    float sq = 0.0f;
    for (std::size_t i = 0; i < h; ++i) {
      const float d = row[i] - mean;
      sq += d * d;
    }
    const float inv_std = 1.0f / std::sqrt(sq * inv_h + eps);
    float* dst = out.data() + r * h;
    for (std::size_t i = 0; i < h; ++i) dst[i] = (row[i] - mean) * inv_std * g[i] + b[i];
  }
  return Tensor::from_f32(x.shape(), std::move(out));
}

Tensor gelu(const Tensor& x) {
  require_float(x, "gelu input");
  constexpr float kInvSqrt2 = 0.70710678118654752440f;
  auto apply = [&](float v) { return 0.5f * v * (1.0f + std::erf(v * kInvSqrt2)); };
  if (x.dtype() == Dtype::kF16) {
    auto src = x.f16();
    std::vector<Half> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = float_to_half(apply(half_to_float(src[i])));
    return Tensor::from_f16(x.shape(), std::move(out));
  }
  auto src = x.f32();
  std::vector<float> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = apply(src[i]);
  return Tensor::from_f32(x.shape(), std::move(out));
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  require_float(x, "softmax input");
  if (axis >= x.rank()) {
    fail(ErrorKind::kDimension, "softmax axis " + std::to_string(axis) + " invalid for shape " +
                                    shape_string(x.shape()));
  }
  auto v = widen(x);
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];

  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      float* base = v.data() + o * n * inner + in;
      float mx = base[0];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, base[j * inner]);
      float sum = 0.0f;
      for (std::size_t j = 0; j < n; ++j) {
        const float e = std::exp(base[j * inner] - mx);
        base[j * inner] = e;
        sum += e;
      }
      for (std::size_t j = 0; j < n; ++j) base[j * inner] /= sum;
    }
  }
  return Tensor::from_f32(s, std::move(v));
}

Tensor cast(const Tensor& x, Dtype to) {
  if (to == Dtype::kI8 || x.dtype() == Dtype::kI8) {
    fail(ErrorKind::kUnsupportedCast, "casts involving i8 must go through the quantizer");
  }
  if (x.dtype() == to) return x;
  if (to == Dtype::kF32) return as_f32(x);
  auto src = x.f32();
  std::vector<Half> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = float_to_half(src[i]);
  return Tensor::from_f16(x.shape(), std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::kDimension, "add shape mismatch: " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
  }
  auto av = widen(a);
  const auto bv = widen(b);
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
  return Tensor::from_f32(a.shape(), std::move(av));
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t num_heads,
                 Dtype storage) {
  require_float(q, "attention q");
  require_float(k, "attention k");
  require_float(v, "attention v");
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape()) {
    fail(ErrorKind::kDimension, "attention expects matching [B, T, H] q/k/v");
  }
  const std::size_t batch = q.dim(0), tokens = q.dim(1), hidden = q.dim(2);
  if (num_heads == 0 || hidden % num_heads != 0) {
    fail(ErrorKind::kDimension, "hidden size not divisible by head count");
  }
  if (storage == Dtype::kI8) fail(ErrorKind::kUnsupportedCast, "attention storage cannot be i8");
  const bool half_storage = storage == Dtype::kF16;
  const std::size_t head_dim = hidden / num_heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

  const auto qv = widen(q);
  const auto kv = widen(k);
  const auto vv = widen(v);
  std::vector<float> ctx(qv.size(), 0.0f);
  std::vector<float> probs(tokens);

  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t base = b * tokens * hidden;
    for (std::size_t h = 0; h < num_heads; ++h) {
      const std::size_t off = base + h * head_dim;
      for (std::size_t i = 0; i < tokens; ++i) {
        const float* qi = qv.data() + off + i * hidden;
        float mx = 0.0f;
        for (std::size_t j = 0; j < tokens; ++j) {
          const float* kj = kv.data() + off + j * hidden;
          float dot = 0.0f;
          for (std::size_t e = 0; e < head_dim; ++e) dot += qi[e] * kj[e];
          probs[j] = dot * scale;
          mx = j == 0 ? probs[j] : std::max(mx, probs[j]);
        }
        float sum = 0.0f;
        for (std::size_t j = 0; j < tokens; ++j) {
          probs[j] = std::exp(probs[j] - mx);
          sum += probs[j];
        }
        for (std::size_t j = 0; j < tokens; ++j) {
          probs[j] /= sum;
          if (half_storage) probs[j] = round_to_half(probs[j]);
        }
        float* out = ctx.data() + off + i * hidden;
        for (std::size_t j = 0; j < tokens; ++j) {
          const float p = probs[j];
          const float* vj = vv.data() + off + j * hidden;
          for (std::size_t e = 0; e < head_dim; ++e) out[e] += p * vj[e];
        }
      }
    }
  }
  if (half_storage) {
    std::vector<Half> h(ctx.size());
    for (std::size_t i = 0; i < ctx.size(); ++i) h[i] = float_to_half(ctx[i]);
    return Tensor::from_f16(q.shape(), std::move(h));
  }
  return Tensor::from_f32(q.shape(), std::move(ctx));
}

}  // namespace vitslim::ops
