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

#ifndef VITSLIM_PIPELINE_HPP_
#define VITSLIM_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vitslim/dataset.hpp"
#include "vitslim/model.hpp"
#include "vitslim/pruner.hpp"
#include "vitslim/quantizer.hpp"
#include "vitslim/report.hpp"

namespace vitslim {

struct PipelineConfig {
  std::string model = "vit-toy";           // preset name, ignored when checkpoint is set
  std::optional<std::filesystem::path> checkpoint;
  std::size_t calib_samples = 32;
  std::size_t batch_size = 32;
  double prune_percentile = 0.10;
  /// Peak-memory ceiling in MB (1e6 bytes). Unset: a single pruning step.
  std::optional<double> budget_mb;
  std::vector<std::string> fp16_policy{"*"};
  std::vector<std::string> quant_patterns{"*"};
  bool dynamic_activation = false;
  std::uint64_t seed = 0;
  std::vector<std::string> variants = all_variants();
  /// CIFAR-10 batch file or directory; unset selects synthetic data.
  std::optional<std::filesystem::path> cifar;
  std::size_t synthetic_samples = 256;
  /// Evaluate only the first n samples; 0 evaluates all of them.
  std::size_t eval_samples = 0;
  /// Artifact directory; empty writes nothing.
  std::filesystem::path out_dir;

  /// Config error on out-of-range fields or unknown variants.
  void validate() const;
};

/// Runs `model` over the first `limit` samples (all when 0) in batches.
/// Latency is measured per batch with a monotonic clock; the first batch is
/// a warmup excluded from the average but included in the total. Ties in
/// the logits resolve to the lowest class index. FLOPs cover every
/// evaluated sample.
VariantReport evaluate(const VitModel& model, const Dataset& data, std::size_t batch_size,
                       std::size_t limit = 0);

/// The same evaluation with an arbitrary batch classifier, which makes the
/// accounting testable with rigged models.
using BatchClassifier = std::function<Tensor(const Tensor& images)>;
VariantReport evaluate_with(const BatchClassifier& classify, const Dataset& data, std::size_t batch_size,
                            std::size_t limit = 0);

struct PipelineResult {
  BenchReport report;
  std::optional<PruningPlan> plan;
  std::vector<AwqSearch> awq;
  std::map<std::string, VitModel> models;  // by variant
};

/// profile -> prune -> {fp16, int8} -> evaluate. The INT8 branch quantizes
/// the pruned F32 model, never the F16 one. Stage failures are rethrown
/// with the stage name prefixed. With an out_dir, writes report.json,
/// plan.json and awq.json when those stages ran, and <variant>.eflx.
PipelineResult run_pipeline(const PipelineConfig& config);

Dataset load_pipeline_data(const PipelineConfig& config);
VitModel load_pipeline_model(const PipelineConfig& config);

std::string awq_to_json(const std::vector<AwqSearch>& searches);

}  // namespace vitslim

#endif  // VITSLIM_PIPELINE_HPP_
