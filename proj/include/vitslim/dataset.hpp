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

#ifndef VITSLIM_DATASET_HPP_
#define VITSLIM_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vitslim/profiler.hpp"
#include "vitslim/tensor.hpp"

namespace vitslim {

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;  // 3072
inline constexpr std::size_t kCifarRecord = 1 + kCifarPixels;             // 3073
inline constexpr int kCifarClasses = 10;

struct Dataset {
  Tensor images;            // [N, 3, H, W] f32, standardized
  std::vector<int> labels;  // N
  std::string source;       // "cifar10-binary:<path>" or "synthetic(<seed>)"

  std::size_t size() const { return labels.size(); }

  /// Samples [first, first + count) as a batch tensor.
  Tensor batch_images(std::size_t first, std::size_t count) const;

  /// `n` distinct samples chosen by a partial Fisher-Yates shuffle with Rng(seed).
  CalibrationSet calibration(std::size_t n, std::uint64_t seed) const;
};

/// Parses concatenated CIFAR-10 binary records: one label byte, then the
/// 1024 R bytes, 1024 G bytes and 1024 B bytes of a 32x32 row-major image.
Dataset parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source);

/// `path` is either a batch file or a directory holding test_batch.bin.
Dataset load_cifar10(const std::filesystem::path& path);

/// Deterministic stand-in for CIFAR-10: labels are i mod 10 (so class counts
/// differ by at most one), pixel bytes come from Rng(seed).
Dataset synthetic_dataset(std::size_t n, std::uint64_t seed, std::size_t image_size = kCifarSide);

}  // namespace vitslim

#endif  // VITSLIM_DATASET_HPP_
