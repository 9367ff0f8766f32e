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

#ifndef VITSLIM_PROFILER_HPP_
#define VITSLIM_PROFILER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vitslim/model.hpp"
#include "vitslim/tensor.hpp"

namespace vitslim {

// Images are stored standardized: byte / 255 -> [0, 1] -> (v - 0.5) / 0.5.
float normalize_pixel(std::uint8_t byte) noexcept;
std::uint8_t denormalize_pixel(float value) noexcept;

struct CalibrationSet {
  Tensor images;                 // [N, C, H, W], f32, standardized
  std::vector<int> labels;       // N entries

  std::size_t size() const { return labels.size(); }
};

struct LayerStats {
  std::vector<double> channel_mean_abs;  // per output channel (post-GELU for intermediate.dense)
  std::vector<double> input_mean_abs;    // per input channel of the same linear
  std::uint64_t samples_seen = 0;
  std::uint64_t tokens_seen = 0;
  std::uint64_t activation_bytes = 0;    // byte_size of the output at calibration batch size

  friend bool operator==(const LayerStats&, const LayerStats&) = default;
};

struct ActivationStats {
  std::map<std::string, LayerStats, std::less<>> layers;

  bool contains(std::string_view name) const { return layers.find(name) != layers.end(); }
  /// Lookup error if the layer was not profiled.
  const LayerStats& at(std::string_view name) const;

  friend bool operator==(const ActivationStats&, const ActivationStats&) = default;
};

/// Both MLP linears of every block.
std::vector<std::string> default_profile_filter();

/// Runs the calibration images through `model` as one batch and accumulates
/// mean |activation| per channel over samples and tokens. Sums are F64 in a
/// fixed sample -> token -> channel order, so the result is a pure function
/// of (model, calibration set).
///
/// Requires an all-F32 model (profiling precedes every conversion).
ActivationStats profile(const VitModel& model, const CalibrationSet& calib,
                        const std::vector<std::string>& layer_filter = default_profile_filter());

std::string stats_to_json(const ActivationStats& stats);
ActivationStats stats_from_json(std::string_view text);

/// Writes `k` seeded-random samples as binary PPM (P6, maxval 255) named
/// sample_<index>.ppm plus manifest.csv ("index,label"). Selection is a
/// partial Fisher-Yates shuffle driven by Rng(seed). Returns the chosen
/// dataset indices in manifest order.
std::vector<std::size_t> dump_samples(const CalibrationSet& calib, std::size_t k,
                                      const std::filesystem::path& out_dir, std::uint64_t seed);

}  // namespace vitslim

#endif  // VITSLIM_PROFILER_HPP_
