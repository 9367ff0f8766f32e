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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vitslim/error.hpp"
#include "vitslim/precision.hpp"
#include "vitslim/pruner.hpp"
#include "vitslim/quantizer.hpp"

namespace vitslim {
namespace {

using namespace vitslim::testing;

const ModelConfig kToy = ModelConfig::preset("vit-toy");

TEST(PruneCount, FloorConvention) {
  EXPECT_EQ(prune_count(0.10, 5120), 512u);
  EXPECT_EQ(prune_count(0.10, 256), 25u);
  EXPECT_EQ(prune_count(0.29, 100), 29u);
  EXPECT_EQ(prune_count(0.10, 9), 0u);
  // Against exact rational arithmetic for every percentage and many widths.
  for (std::uint64_t pct = 1; pct < 100; ++pct)
    for (std::size_t c = 1; c <= 700; c += 3) {
      ASSERT_EQ(prune_count(static_cast<double>(pct) / 100.0, c), exact_floor_count(pct, 100, c)) << pct << " " << c;
    }
}

TEST(PruneCount, StepsToFloor) {
  // Repeated 10% steps until no further step is possible.
  auto steps = [](std::size_t w) {
    std::size_t s = 0;
    for (std::size_t k; (k = prune_count(0.10, w)) > 0 && w - k >= kDefaultMinChannels; w -= k) ++s;
    return std::make_pair(s, w);
  };
  EXPECT_EQ(steps(256), std::make_pair(std::size_t{37}, std::size_t{9}));
  EXPECT_EQ(steps(5120), std::make_pair(std::size_t{65}, std::size_t{9}));
  // The log-ratio estimate ceil(log(C/8) / -log(0.9)) + 1 undercounts under flooring.
  auto estimate = [](double c) { return static_cast<std::size_t>(std::ceil(std::log(c / 8) / -std::log(0.9))) + 1; };
  EXPECT_GT(steps(256).first, estimate(256));
  EXPECT_GT(steps(5120).first, estimate(5120));
}

TEST(Ranking, StableAscending) {
  const std::vector<double> v = {0.5, 0.1, 0.5, 0.0, 0.1};
  EXPECT_EQ(rank_by_importance(v), (std::vector<std::size_t>{3, 1, 4, 0, 2}));
}

TEST(PruneStep, DeadChannelsLeaveLogitsUnchanged) {
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    const DeadChannelModel dm = model_with_dead_channels(seed, 25, 40);
    const CalibrationSet calib = random_calibration(kToy, 8, seed + 100);
    const ActivationStats stats = profile(dm.model, calib);
    const PruneResult r = prune_step(dm.model, stats, 0.10);
    EXPECT_EQ(r.removed, 4u * 25);
    for (std::size_t l = 0; l < 4; ++l) {
      const auto& keep = r.plan.keep.at(layer_names::intermediate(l));
      // Nothing outside the dead set is removed.
      std::vector<std::size_t> removed;
      for (std::size_t c = 0, j = 0; c < 256; ++c) {
        if (j < keep.size() && keep[j] == c) ++j;
        else removed.push_back(c);
      }
      EXPECT_TRUE(std::includes(dm.dead[l].begin(), dm.dead[l].end(), removed.begin(), removed.end()));
    }
    const Tensor a = forward(dm.model, calib.images), b = forward(r.model, calib.images);
    auto av = a.f32(), bv = b.f32();
    for (std::size_t i = 0; i < av.size(); ++i) EXPECT_NEAR(av[i], bv[i], 1e-6);
  }
}

TEST(PruneStep, SlicesMatchingRowsAndColumns) {
  const VitModel m = init_model(kToy, 21);
  const ActivationStats stats = profile(m, random_calibration(kToy, 4, 21));
  const PruneResult r = prune_step(m, stats, 0.10);
  for (std::size_t l = 0; l < 4; ++l) {
    const EncoderLayer& before = m.layers[l];
    const EncoderLayer& after = r.model.layers[l];
    ASSERT_EQ(after.mlp_width(), 231u);
    ASSERT_EQ(after.output.in_features(), 231u);
    EXPECT_EQ(after.channel_ids, r.plan.keep.at(layer_names::intermediate(l)));

    // Removed channels are exactly the 25 smallest by mean |activation|.
    const auto& means = stats.at(layer_names::intermediate(l)).channel_mean_abs;
    const auto order = rank_by_importance(means);
    std::vector<std::size_t> expected_keep(order.begin() + 25, order.end());
    std::sort(expected_keep.begin(), expected_keep.end());
    EXPECT_EQ(after.channel_ids, expected_keep);

    auto wi0 = before.intermediate.weight.f32(), wi1 = after.intermediate.weight.f32();
    auto wo0 = before.output.weight.f32(), wo1 = after.output.weight.f32();
    for (std::size_t j = 0; j < 231; ++j) {
      const std::size_t src = after.channel_ids[j];
      for (std::size_t h = 0; h < 64; ++h) {
        ASSERT_EQ(wi1[j * 64 + h], wi0[src * 64 + h]);
        ASSERT_EQ(wo1[h * 231 + j], wo0[h * 256 + src]);
      }
    }
  }
  EXPECT_TRUE(bitwise_equal(apply_plan(m, r.plan), r.model));
  EXPECT_TRUE(bitwise_equal(apply_plan(r.model, r.plan), r.model));
}

TEST(PruneStep, SecondStepUsesOriginalStatsThroughChannelIds) {
  const VitModel m = init_model(kToy, 22);
  const ActivationStats stats = profile(m, random_calibration(kToy, 4, 22));
  const PruneResult one = prune_step(m, stats, 0.10);
  const PruneResult two = prune_step(one.model, stats, 0.10);
  const auto& means = stats.at(layer_names::intermediate(0)).channel_mean_abs;
  const auto order = rank_by_importance(means);
  std::vector<std::size_t> expected(order.begin() + 25 + 23, order.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(two.model.layers[0].channel_ids, expected);
}

TEST(PruneStep, FloorSkipsLayers) {
  const VitModel m = init_model(kToy, 23);
  const ActivationStats stats = profile(m, random_calibration(kToy, 2, 23));
  const PruneResult r = prune_step(m, stats, 0.10, 240);
  EXPECT_EQ(r.removed, 0u);
  EXPECT_EQ(r.plan.skipped.size(), 4u);
  EXPECT_TRUE(bitwise_equal(r.model, m));
}

TEST(PruneStep, PrunesHalfPrecisionModels) {
  const VitModel m = init_model(kToy, 24);
  const ActivationStats stats = profile(m, random_calibration(kToy, 2, 24));
  const PruneResult a = prune_step(m, stats, 0.10);
  const PruneResult b = prune_step(to_fp16(m), stats, 0.10);
  EXPECT_TRUE(bitwise_equal(to_fp16(a.model), b.model));
}

TEST(MemoryModel, ToyPeakMatchesSimulation) {
  const VitModel m = init_model(kToy, 0);
  const MemoryModel mm = estimate_peak(m, 32);
  EXPECT_EQ(mm.weight_bytes, 832296u);
  EXPECT_EQ(mm.peak_estimate(), 5657896u);
  EXPECT_EQ(mm.peak_estimate(), simulated_peak(kToy, {256, 256, 256, 256}, 32));
  EXPECT_EQ(mm.blocks.size(), 4u);
  EXPECT_EQ(mm.blocks[0].scores_bytes, 32u * 4 * 65 * 65 * 4);
}

TEST(MemoryModel, ActivationWidthFollowsBlockPrecision) {
  const VitModel m = init_model(kToy, 0);
  EXPECT_EQ(activation_element_bytes(m.layers[0]), 4u);
  const VitModel h = to_fp16(m);
  EXPECT_EQ(activation_element_bytes(h.layers[0]), 2u);
  const VitModel mixed = to_fp16(m, PrecisionPolicy{{"encoder.layer.0.attention.*"}});
  EXPECT_EQ(activation_element_bytes(mixed.layers[0]), 4u);
  const CalibrationSet calib = random_calibration(kToy, 2, 1);
  const VitModel q = quantize_model(m, profile(m, calib, {"*"}), calib);
  EXPECT_EQ(activation_element_bytes(q.layers[0]), 1u);
}

TEST(Budget, StepCountsMatchSimulation) {
  const VitModel m = init_model(kToy, 25);
  const ActivationStats stats = profile(m, random_calibration(kToy, 4, 25));
  const std::uint64_t initial = estimate_peak(m, 32).peak_estimate();
  for (double frac : {1.0, 0.95, 0.90, 0.80, 0.60}) {
    const auto budget = static_cast<std::uint64_t>(frac * static_cast<double>(initial));
    const BudgetSimulation sim = simulate_budget(kToy, 32, 0.10, kDefaultMinChannels, budget);
    try {
      const BudgetResult r = prune_to_budget(m, stats, budget);
      EXPECT_FALSE(sim.infeasible) << frac;
      EXPECT_EQ(r.plans.size(), sim.steps) << frac;
      EXPECT_LE(r.memory.peak_estimate(), budget);
      EXPECT_EQ(r.memory.peak_estimate(), sim.final_peak);
      for (std::size_t l = 0; l < 4; ++l) EXPECT_EQ(r.model.layers[l].mlp_width(), sim.widths[l]);
    } catch (const BudgetInfeasibleError& e) {
      EXPECT_TRUE(sim.infeasible) << frac;
      EXPECT_EQ(e.kind(), ErrorKind::kBudgetInfeasible);
      EXPECT_EQ(e.best_peak_bytes(), sim.final_peak);
    }
  }
}

TEST(Budget, InfeasibleBudgetRaises) {
  const VitModel m = init_model(kToy, 26);
  const ActivationStats stats = profile(m, random_calibration(kToy, 2, 26));
  EXPECT_THROW(prune_to_budget(m, stats, 1000000), BudgetInfeasibleError);
}

TEST(Budget, ReprofilingVariantStillMeetsBudget) {
  const VitModel m = init_model(kToy, 27);
  const CalibrationSet calib = random_calibration(kToy, 4, 27);
  const ActivationStats stats = profile(m, calib);
  BudgetOptions opts;
  opts.reprofile_with = &calib;
  const std::uint64_t budget = estimate_peak(m, 32).peak_estimate() * 9 / 10;
  const BudgetResult r = prune_to_budget(m, stats, budget, opts);
  EXPECT_LE(r.memory.peak_estimate(), budget);
  EXPECT_EQ(r.plans.size(), simulate_budget(kToy, 32, 0.10, 8, budget).steps);
}

TEST(Plan, JsonRoundTrip) {
  const VitModel m = init_model(kToy, 28);
  const ActivationStats stats = profile(m, random_calibration(kToy, 2, 28));
  const BudgetResult r = prune_to_budget(m, stats, estimate_peak(m, 32).peak_estimate() * 9 / 10);
  const PruningPlan plan = combine_plans(r.plans);
  EXPECT_EQ(plan.steps, r.plans.size());
  const PruningPlan back = plan_from_json(plan_to_json(plan));
  EXPECT_EQ(back.keep, plan.keep);
  EXPECT_EQ(back.steps, plan.steps);
  EXPECT_DOUBLE_EQ(back.percentile, 0.10);
  EXPECT_TRUE(bitwise_equal(apply_plan(m, back), r.model));
  try {
    plan_from_json("[1, 2]");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
}

}  // namespace
}  // namespace vitslim
