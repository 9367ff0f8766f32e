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

#ifndef VITSLIM_RNG_HPP_
#define VITSLIM_RNG_HPP_

#include <cstdint>
#include <random>

namespace vitslim {

/// Reproducible generator for weights and synthetic data.
///
/// The engine is std::mt19937_64 (fully specified by the C++ standard) seeded
/// with the 64-bit seed. Derived variates never go through
/// std::*_distribution, whose algorithms are implementation-defined:
///
///   uniform()   = (next() >> 11) * 2^-53                     in [0, 1)
///   normal()    = sqrt(-2 ln(u1)) * cos(2 pi u2)   with
///                 u1 = ((next() >> 11) + 1) * 2^-53          in (0, 1]
///                 u2 = uniform()
///   below(n)    = next() % n
///
/// Each normal() consumes exactly two engine outputs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double normal();
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vitslim

#endif  // VITSLIM_RNG_HPP_
