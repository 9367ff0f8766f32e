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

#include "vitslim/precision.hpp"

#include "vitslim/error.hpp"
#include "vitslim/ops.hpp"

namespace vitslim {

VitModel to_fp16(const VitModel& model, const PrecisionPolicy& policy) {
  VitModel out = model;
  out.for_each_linear([&](const std::string& name, Linear& lin) {
    if (!matches_any(policy.convert, name)) return;
    if (lin.is_quantized()) {
      fail(ErrorKind::kPrecisionState, name + " is INT8-quantized and cannot be converted to f16");
    }
    lin.weight = ops::cast(lin.weight, Dtype::kF16);
    lin.bias = ops::cast(lin.bias, Dtype::kF16);
  });
  return out;
}

}  // namespace vitslim
