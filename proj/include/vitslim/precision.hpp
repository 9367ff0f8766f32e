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

#ifndef VITSLIM_PRECISION_HPP_
#define VITSLIM_PRECISION_HPP_

#include <string>
#include <vector>

#include "vitslim/model.hpp"

namespace vitslim {

/// Which linears get F16 storage. Only linear weights and biases are
/// addressable: layernorm parameters, embeddings, softmax and every
/// accumulation stay F32 regardless of the patterns.
struct PrecisionPolicy {
  std::vector<std::string> convert{"*"};

  /// Attention and MLP linears, patch embedding and head.
  static PrecisionPolicy all_linears() { return {}; }
};

/// Casts every matched linear to F16 (round-to-nearest-even). Already-F16
/// layers are left as they are, so the conversion is idempotent. A matched
/// INT8 layer is a precision-state error.
VitModel to_fp16(const VitModel& model, const PrecisionPolicy& policy = PrecisionPolicy::all_linears());

}  // namespace vitslim

#endif  // VITSLIM_PRECISION_HPP_
