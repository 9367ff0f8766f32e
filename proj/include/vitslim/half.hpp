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

#ifndef VITSLIM_HALF_HPP_
#define VITSLIM_HALF_HPP_

#include <cstdint>

namespace vitslim {

/// IEEE 754 binary16 storage. Arithmetic is never done in half precision:
/// values are widened to float (exactly) before use.
struct Half {
  std::uint16_t bits = 0;

  friend bool operator==(Half, Half) = default;
};

/// Round-to-nearest-even, saturating to +-infinity at and beyond 65520.
/// NaN stays NaN (quiet bit set). Implemented in integer arithmetic so the
/// result does not depend on the host's native half support.
Half float_to_half(float value) noexcept;

/// Exact widening.
float half_to_float(Half value) noexcept;

inline float round_to_half(float value) noexcept { return half_to_float(float_to_half(value)); }

}  // namespace vitslim

#endif  // VITSLIM_HALF_HPP_
