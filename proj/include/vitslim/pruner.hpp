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

#ifndef VITSLIM_PRUNER_HPP_
#define VITSLIM_PRUNER_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vitslim/model.hpp"
#include "vitslim/profiler.hpp"

namespace vitslim {

/// Live activation bytes of one encoder block at its peak. Liveness table:
/// the block input [B, T, H], the attention probabilities [B, heads, T, T]
/// and the MLP intermediate [B, T, width] are held simultaneously. Each is
/// counted at the block's activation storage width: 4 bytes if any linear
/// of the block is F32, else 2 if any is F16, else 1 (fully INT8 block).
struct BlockActivation {
  std::uint64_t input_bytes = 0;
  std::uint64_t scores_bytes = 0;
  std::uint64_t mlp_bytes = 0;

  std::uint64_t total() const { return input_bytes + scores_bytes + mlp_bytes; }
};

struct MemoryModel {
  std::uint64_t weight_bytes = 0;
  std::uint64_t peak_activation_bytes = 0;
  std::size_t batch_size = 0;
  std::vector<BlockActivation> blocks;

  std::uint64_t peak_estimate() const { return weight_bytes + peak_activation_bytes; }
};

/// Bytes per stored activation element for a block (see BlockActivation).
std::size_t activation_element_bytes(const EncoderLayer& layer);

MemoryModel estimate_peak(const VitModel& model, std::size_t batch);

struct PruningPlan {
  /// intermediate.dense layer name -> surviving channels, as ascending
  /// indices into the ORIGINAL (unpruned) channel space.
  std::map<std::string, std::vector<std::size_t>> keep;
  double percentile = 0.0;
  std::size_t steps = 1;
  /// Layers left untouched because the step would cross the channel floor.
  std::vector<std::string> skipped;
};

inline constexpr std::size_t kDefaultMinChannels = 8;

/// Ascending by value; ties by ascending index.
std::vector<std::size_t> rank_by_importance(std::span<const double> importance);

/// Ranking of one profiled layer's output channels (indices into its stats).
std::vector<std::size_t> rank_channels(const ActivationStats& stats, std::string_view layer);

/// floor(percentile * channels), with a 1e-9 guard against representation
/// error in the product (0.29 * 100 prunes 29, not 28).
std::size_t prune_count(double percentile, std::size_t channels);

struct PruneResult {
  VitModel model;
  PruningPlan plan;
  std::size_t removed = 0;  // channels removed across all layers
};

/// Removes the floor(p * C) lowest-ranked intermediate channels of every
/// block: rows of intermediate.{weight,bias} together with the matching
/// columns of output.weight. Layers that would drop below `min_channels` are
/// skipped and listed in the plan.
///
/// Stats may either match the current width (positional) or cover the
/// original channel space (looked up through EncoderLayer::channel_ids).
PruneResult prune_step(const VitModel& model, const ActivationStats& stats, double percentile,
                       std::size_t min_channels = kDefaultMinChannels);

/// Keeps exactly the channels whose original index is listed. Applying the
/// same plan twice is a no-op the second time.
VitModel apply_plan(const VitModel& model, const PruningPlan& plan);

struct BudgetOptions {
  double percentile = 0.10;
  std::size_t batch = 32;
  std::size_t min_channels = kDefaultMinChannels;
  /// When set, stats are recomputed on the pruned model before every step
  /// instead of reusing the originals.
  const CalibrationSet* reprofile_with = nullptr;
};

struct BudgetResult {
  VitModel model;
  std::vector<PruningPlan> plans;  // one per applied step
  MemoryModel memory;              // estimate of the returned model
};

/// Repeats prune_step until estimate_peak(model, batch).peak_estimate() fits
/// `budget_bytes`. Throws BudgetInfeasibleError when a step makes no
/// progress before the budget is met.
BudgetResult prune_to_budget(const VitModel& model, const ActivationStats& stats,
                             std::uint64_t budget_bytes, const BudgetOptions& options = {});

/// Collapses a step sequence into one plan: final keep sets, total steps.
PruningPlan combine_plans(const std::vector<PruningPlan>& plans);

/// {"layers": {name: {"keep": [...], "percentile": p}}, "steps": k}
std::string plan_to_json(const PruningPlan& plan);
PruningPlan plan_from_json(std::string_view text);

}  // namespace vitslim

#endif  // VITSLIM_PRUNER_HPP_
