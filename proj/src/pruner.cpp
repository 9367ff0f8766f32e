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

#include "vitslim/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "vitslim/error.hpp"

namespace vitslim {

std::size_t activation_element_bytes(const EncoderLayer& layer) {
  std::size_t widest = 1;
  for (const Linear* lin : {&layer.query, &layer.key, &layer.value, &layer.attn_output,
                            &layer.intermediate, &layer.output}) {
    widest = std::max(widest, bytes_per_element(lin->state()));
  }
  return widest;
}

MemoryModel estimate_peak(const VitModel& model, std::size_t batch) {
  const ModelConfig& c = model.config;
  const std::uint64_t b = batch, t = c.tokens(), h = c.hidden_size, heads = c.num_heads;
  MemoryModel mem;
  mem.batch_size = batch;
  mem.weight_bytes = weight_bytes(model);
  for (const auto& layer : model.layers) {
    const std::uint64_t e = activation_element_bytes(layer);
    BlockActivation blk;
    blk.input_bytes = b * t * h * e;
    blk.scores_bytes = b * heads * t * t * e;
    blk.mlp_bytes = b * t * layer.mlp_width() * e;
    mem.peak_activation_bytes = std::max(mem.peak_activation_bytes, blk.total());
    mem.blocks.push_back(blk);
  }
  return mem;
}

std::vector<std::size_t> rank_by_importance(std::span<const double> importance) {
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] < importance[b]; });
  return order;
}

std::vector<std::size_t> rank_channels(const ActivationStats& stats, std::string_view layer) {
  return rank_by_importance(stats.at(layer).channel_mean_abs);
}

std::size_t prune_count(double percentile, std::size_t channels) {
  return static_cast<std::size_t>(std::floor(percentile * static_cast<double>(channels) + 1e-9));
}

namespace {

template <typename T>
std::vector<T> gather_rows(std::span<const T> src, std::size_t cols, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size() * cols);
  for (std::size_t r : rows) out.insert(out.end(), src.begin() + r * cols, src.begin() + (r + 1) * cols);
  return out;
}

template <typename T>
std::vector<T> gather_cols(std::span<const T> src, std::size_t cols, const std::vector<std::size_t>& keep) {
  const std::size_t rows = src.size() / cols;
  std::vector<T> out;
  out.reserve(rows * keep.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c : keep) out.push_back(src[r * cols + c]);
  }
  return out;
}

Tensor select_rows(const Tensor& t, const std::vector<std::size_t>& rows) {
  const std::size_t cols = t.rank() == 2 ? t.dim(1) : 1;
  Shape shape = t.shape();
  shape[0] = rows.size();
  if (t.dtype() == Dtype::kF16) return Tensor::from_f16(shape, gather_rows(t.f16(), cols, rows));
  return Tensor::from_f32(shape, gather_rows(t.f32(), cols, rows));
}

Tensor select_cols(const Tensor& t, const std::vector<std::size_t>& keep) {
  const std::size_t cols = t.dim(1);
  Shape shape{t.dim(0), keep.size()};
  if (t.dtype() == Dtype::kF16) return Tensor::from_f16(shape, gather_cols(t.f16(), cols, keep));
  return Tensor::from_f32(shape, gather_cols(t.f32(), cols, keep));
}

// Rebuilds the MLP of one block keeping the given positions (ascending).
void keep_positions(EncoderLayer& layer, const std::vector<std::size_t>& positions,
                    const std::string& name) {
  if (layer.intermediate.is_quantized() || layer.output.is_quantized()) {
    fail(ErrorKind::kPrecisionState, name + " is quantized; prune before quantizing");
  }
  if (positions.empty()) fail(ErrorKind::kInvariant, name + " would lose every channel");
  layer.intermediate.weight = select_rows(layer.intermediate.weight, positions);
  layer.intermediate.bias = select_rows(layer.intermediate.bias, positions);
  layer.output.weight = select_cols(layer.output.weight, positions);
  std::vector<std::size_t> ids;
  ids.reserve(positions.size());
  for (std::size_t p : positions) ids.push_back(layer.channel_ids[p]);
  layer.channel_ids = std::move(ids);
}

std::vector<double> importance_for(const EncoderLayer& layer, const LayerStats& s,
                                   const std::string& name) {
  const auto& v = s.channel_mean_abs;
  const std::size_t width = layer.mlp_width();
  if (v.size() == width) return v;
  std::vector<double> out(width);
  for (std::size_t i = 0; i < width; ++i) {
    const std::size_t id = layer.channel_ids[i];
    if (id >= v.size()) {
      fail(ErrorKind::kDimension, "stats for " + name + " cover " + std::to_string(v.size()) +
                                      " channels but channel " + std::to_string(id) + " survives");
    }
    out[i] = v[id];
  }
  return out;
}

}  // namespace

PruneResult prune_step(const VitModel& model, const ActivationStats& stats, double percentile,
                       std::size_t min_channels) {
  if (!(percentile > 0.0 && percentile < 1.0)) {
    fail(ErrorKind::kConfig, "prune percentile must be in (0, 1), got " + std::to_string(percentile));
  }
  PruneResult result{model, {}, 0};
  result.plan.percentile = percentile;
  for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
    EncoderLayer& layer = result.model.layers[l];
    const std::string name = layer_names::intermediate(l);
    const std::size_t width = layer.mlp_width();
    const std::size_t k = prune_count(percentile, width);

    if (k > 0 && width - k >= min_channels) {
      const auto importance = importance_for(layer, stats.at(name), name);
      const auto order = rank_by_importance(importance);
      std::vector<std::size_t> positions(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
      std::sort(positions.begin(), positions.end());
      keep_positions(layer, positions, name);
      result.removed += k;
    } else if (k > 0) {
      result.plan.skipped.push_back(name);
    }
    result.plan.keep[name] = layer.channel_ids;
  }
  return result;
}

VitModel apply_plan(const VitModel& model, const PruningPlan& plan) {
  VitModel out = model;
  for (const auto& [name, keep] : plan.keep) {
    std::size_t l = 0;
    while (l < out.layers.size() && layer_names::intermediate(l) != name) ++l;
    if (l == out.layers.size()) fail(ErrorKind::kLookup, "plan names unknown layer '" + name + "'");
    EncoderLayer& layer = out.layers[l];
    const std::set<std::size_t> wanted(keep.begin(), keep.end());
    std::vector<std::size_t> positions;
    for (std::size_t p = 0; p < layer.channel_ids.size(); ++p) {
      if (wanted.count(layer.channel_ids[p])) positions.push_back(p);
    }
    if (positions.size() == layer.channel_ids.size()) continue;
    keep_positions(layer, positions, name);
  }
  return out;
}

BudgetResult prune_to_budget(const VitModel& model, const ActivationStats& stats,
                             std::uint64_t budget_bytes, const BudgetOptions& options) {
  BudgetResult result{model, {}, estimate_peak(model, options.batch)};
  ActivationStats current = stats;
  while (result.memory.peak_estimate() > budget_bytes) {
    if (options.reprofile_with && !result.plans.empty()) {
      current = profile(result.model, *options.reprofile_with);
    }
    PruneResult step = prune_step(result.model, current, options.percentile, options.min_channels);
    if (step.removed == 0) {
      const std::uint64_t best = result.memory.peak_estimate();
      throw BudgetInfeasibleError("peak estimate " + std::to_string(best) + " B cannot reach budget " +
                                      std::to_string(budget_bytes) + " B: every layer is at its channel floor",
                                  best);
    }
    for (const auto& name : step.plan.skipped) {
      std::cerr << "[pruner] " << name << " kept at " << step.plan.keep[name].size()
                << " channels (floor " << options.min_channels << ")\n";
    }
    result.model = std::move(step.model);
    result.plans.push_back(std::move(step.plan));
    result.memory = estimate_peak(result.model, options.batch);
  }
  return result;
}

PruningPlan combine_plans(const std::vector<PruningPlan>& plans) {
  PruningPlan out;
  out.steps = plans.size();
  if (plans.empty()) return out;
  out.keep = plans.back().keep;
  out.percentile = plans.back().percentile;
  std::set<std::string> skipped;
  for (const auto& p : plans) skipped.insert(p.skipped.begin(), p.skipped.end());
  out.skipped.assign(skipped.begin(), skipped.end());
  return out;
}

std::string plan_to_json(const PruningPlan& plan) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::object();
  for (const auto& [name, keep] : plan.keep) {
    j["layers"][name] = {{"keep", keep}, {"percentile", plan.percentile}};
  }
  j["steps"] = plan.steps;
  return j.dump(1);
}

PruningPlan plan_from_json(std::string_view text) {
  PruningPlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [name, entry] : j.at("layers").items()) {
      auto keep = entry.at("keep").get<std::vector<std::size_t>>();
      if (keep.empty() || !std::is_sorted(keep.begin(), keep.end()) ||
          std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
        fail(ErrorKind::kFormat, "keep list for " + name + " must be non-empty and strictly increasing");
      }
      plan.keep[name] = std::move(keep);
      plan.percentile = entry.at("percentile").get<double>();
    }
    plan.steps = j.at("steps").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed pruning plan: ") + e.what());
  }
  return plan;
}

}  // namespace vitslim
