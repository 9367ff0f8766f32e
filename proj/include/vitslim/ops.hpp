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

#ifndef VITSLIM_OPS_HPP_
#define VITSLIM_OPS_HPP_

#include <cstddef>

#include "vitslim/tensor.hpp"

namespace vitslim::ops {

// Mixed-precision contract: F16 operands are widened exactly to float and
// every reduction accumulates in float. Dot products run over the inner
// dimension in ascending index order, so results match a naive triple loop
// bit for bit.

/// a[M,K] x b[K,N] -> F32 [M,N]. Operands may be F32 or F16.
Tensor matmul(const Tensor& a, const Tensor& b);

/// x[..., K] x weight[N, K]^T + bias[N] -> F32 [..., N]. The bias is added
/// after the full dot product.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Normalizes over the last axis. Always computes and returns F32.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-6f);

/// Exact-erf GELU, computed in float. Output keeps the input dtype (F16 in
/// means the result is rounded back to F16 storage).
Tensor gelu(const Tensor& x);

/// Max-shifted softmax along `axis`, computed and returned in F32.
Tensor softmax(const Tensor& x, std::size_t axis);

/// F32 <-> F16 only. Anything involving I8 is the quantizer's business.
Tensor cast(const Tensor& x, Dtype to);

/// Elementwise a + b in F32 (used for residual connections).
Tensor add(const Tensor& a, const Tensor& b);

/// Multi-head scaled dot-product attention over q, k, v of shape [B, T, H].
/// Scores and probabilities are computed in F32. When `storage` is F16 the
/// probabilities and the context are rounded to F16 before being consumed,
/// matching what a half-precision executor would hold in memory.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t num_heads,
                 Dtype storage = Dtype::kF32);

}  // namespace vitslim::ops

#endif  // VITSLIM_OPS_HPP_
