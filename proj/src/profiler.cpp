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

#include "vitslim/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "vitslim/error.hpp"
#include "vitslim/rng.hpp"

namespace vitslim {

float normalize_pixel(std::uint8_t byte) noexcept {
  return (static_cast<float>(byte) / 255.0f - 0.5f) / 0.5f;
}

std::uint8_t denormalize_pixel(float value) noexcept {
  const float v = std::round((value * 0.5f + 0.5f) * 255.0f);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
}

const LayerStats& ActivationStats::at(std::string_view name) const {
  auto it = layers.find(name);
  if (it == layers.end()) fail(ErrorKind::kLookup, "no activation stats for '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> default_profile_filter() {
  return {"encoder.layer.*.intermediate.dense", "encoder.layer.*.output.dense"};
}

namespace {

struct Accumulator {
  std::vector<double> out_sum;
  std::vector<double> in_sum;
  std::uint64_t tokens = 0;
  std::uint64_t bytes = 0;
};

// Adds |x| row by row; rows are (sample, token) pairs in memory order.
void accumulate_abs(const Tensor& t, std::vector<double>& sums) {
  const std::size_t width = t.shape().back();
  if (sums.empty()) sums.assign(width, 0.0);
  const std::size_t rows = t.numel() / width;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      sums[c] += std::fabs(static_cast<double>(t.value_at(r * width + c)));
    }
  }
}

}  // namespace

ActivationStats profile(const VitModel& model, const CalibrationSet& calib,
                        const std::vector<std::string>& layer_filter) {
  if (calib.size() == 0 || calib.images.empty()) fail(ErrorKind::kInput, "calibration set is empty");
  if (calib.images.dim(0) != calib.size()) {
    fail(ErrorKind::kInput, "calibration images and labels disagree in count");
  }
  for (int label : calib.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.config.num_classes) {
      fail(ErrorKind::kInput, "calibration label " + std::to_string(label) + " out of range");
    }
  }

  std::vector<std::string> observed;
  model.for_each_linear([&](const std::string& name, const Linear& lin) {
    if (lin.state() != Dtype::kF32) {
      fail(ErrorKind::kPrecisionState, "profiling requires an f32 model; " + name + " is " +
                                           dtype_name(lin.state()));
    }
    if (matches_any(layer_filter, name)) observed.push_back(name);
  });
  if (observed.empty()) fail(ErrorKind::kConfig, "layer filter matches no linear layer");

  std::map<std::string, Accumulator, std::less<>> acc;
  for (const auto& name : observed) acc[name];

  ObserverSet observers(observed, [&](const LinearObservation& obs) {
    Accumulator& a = acc.find(obs.name)->second;
    accumulate_abs(obs.output, a.out_sum);
    accumulate_abs(obs.input, a.in_sum);
    a.tokens += obs.output.numel() / obs.output.shape().back();
    a.bytes += obs.output.byte_size();
  });
  forward(model, calib.images, &observers);

  ActivationStats stats;
  for (auto& [name, a] : acc) {
    LayerStats s;
    s.samples_seen = calib.size();
    s.tokens_seen = a.tokens;
    s.activation_bytes = a.bytes;
    const double denom = static_cast<double>(a.tokens);
    s.channel_mean_abs.resize(a.out_sum.size());
    for (std::size_t c = 0; c < a.out_sum.size(); ++c) s.channel_mean_abs[c] = a.out_sum[c] / denom;
    s.input_mean_abs.resize(a.in_sum.size());
    for (std::size_t c = 0; c < a.in_sum.size(); ++c) s.input_mean_abs[c] = a.in_sum[c] / denom;
    stats.layers.emplace(name, std::move(s));
  }
  return stats;
}

std::string stats_to_json(const ActivationStats& stats) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::object();
  for (const auto& [name, s] : stats.layers) {
    j["layers"][name] = {
        {"channel_mean_abs", s.channel_mean_abs},
        {"input_mean_abs", s.input_mean_abs},
        {"samples_seen", s.samples_seen},
        {"tokens_seen", s.tokens_seen},
        {"activation_bytes", s.activation_bytes},
    };
  }
  return j.dump(1);
}

ActivationStats stats_from_json(std::string_view text) {
  ActivationStats stats;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [name, s] : j.at("layers").items()) {
      LayerStats ls;
      ls.channel_mean_abs = s.at("channel_mean_abs").get<std::vector<double>>();
      ls.input_mean_abs = s.at("input_mean_abs").get<std::vector<double>>();
      ls.samples_seen = s.at("samples_seen").get<std::uint64_t>();
      ls.tokens_seen = s.at("tokens_seen").get<std::uint64_t>();
      ls.activation_bytes = s.at("activation_bytes").get<std::uint64_t>();
      stats.layers.emplace(name, std::move(ls));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed activation stats: ") + e.what());
  }
  return stats;
}

std::vector<std::size_t> dump_samples(const CalibrationSet& calib, std::size_t k,
                                      const std::filesystem::path& out_dir, std::uint64_t seed) {
  const std::size_t n = calib.size();
  if (k > n) {
    fail(ErrorKind::kConfig, "cannot dump " + std::to_string(k) + " samples from a set of " +
                                 std::to_string(n));
  }
  if (k > 0 && (calib.images.rank() != 4 || calib.images.dim(1) != 3)) {
    fail(ErrorKind::kInput, "PPM dumps need [N, 3, H, W] images");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.below(n - i)]);
  order.resize(k);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream manifest(out_dir / "manifest.csv", std::ios::binary);
  if (!manifest) fail(ErrorKind::kIo, "cannot write " + (out_dir / "manifest.csv").string());
  manifest << "index,label\n";

  for (std::size_t idx : order) {
    const std::size_t h = calib.images.dim(2), w = calib.images.dim(3);
    const auto path = out_dir / ("sample_" + std::to_string(idx) + ".ppm");
    std::ofstream ppm(path, std::ios::binary);
    if (!ppm) fail(ErrorKind::kIo, "cannot write " + path.string());
    ppm << "P6\n" << w << ' ' << h << "\n255\n";
    const std::size_t plane = h * w;
    const std::size_t base = idx * 3 * plane;
    std::vector<char> rgb(3 * plane);
    for (std::size_t p = 0; p < plane; ++p) {
      for (std::size_t c = 0; c < 3; ++c) {
        rgb[p * 3 + c] = static_cast<char>(denormalize_pixel(calib.images.value_at(base + c * plane + p)));
      }
    }
    ppm.write(rgb.data(), static_cast<std::streamsize>(rgb.size()));
    if (!ppm) fail(ErrorKind::kIo, "failed writing " + path.string());
    manifest << idx << ',' << calib.labels[idx] << '\n';
  }
  if (!manifest) fail(ErrorKind::kIo, "failed writing manifest");
  return order;
}

}  // namespace vitslim
