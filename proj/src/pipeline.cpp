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

#include "vitslim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <json.hpp>

#include "vitslim/checkpoint.hpp"
#include "vitslim/error.hpp"
#include "vitslim/precision.hpp"
#include "vitslim/profiler.hpp"

namespace vitslim {
namespace {

constexpr double kBytesPerMb = 1e6;

template <typename F>
auto run_stage(const char* stage, F&& body) {
  try {
    return body();
  } catch (const BudgetInfeasibleError& e) {
    throw BudgetInfeasibleError(std::string("stage '") + stage + "': " + e.what(), e.best_peak_bytes());
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage '") + stage + "': " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

bool wants(const PipelineConfig& config, std::string_view variant) {
  return std::find(config.variants.begin(), config.variants.end(), variant) != config.variants.end();
}

}  // namespace

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::kConfig, what);
  };
  require(calib_samples >= 1, "calib_samples must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(prune_percentile > 0.0 && prune_percentile < 1.0, "prune_percentile must be in (0, 1)");
  require(!budget_mb || *budget_mb > 0.0, "budget_mb must be positive");
  require(cifar.has_value() || synthetic_samples >= 1, "synthetic_samples must be at least 1");
  for (const auto& v : variants) require(is_variant(v), "unknown variant '" + v + "'");
}

VariantReport evaluate_with(const BatchClassifier& classify, const Dataset& data, std::size_t batch_size,
                            std::size_t limit) {
  if (batch_size < 1) fail(ErrorKind::kConfig, "batch_size must be at least 1");
  if (data.size() == 0) fail(ErrorKind::kInput, "evaluation dataset is empty");
  const std::size_t n = limit == 0 ? data.size() : std::min(limit, data.size());

  VariantReport r;
  std::size_t correct = 0;
  double warm_total = 0.0;
  for (std::size_t first = 0; first < n; first += batch_size) {
    const std::size_t count = std::min(batch_size, n - first);
    const Tensor images = data.batch_images(first, count);
    const auto start = std::chrono::steady_clock::now();
    const Tensor logits = as_f32(classify(images));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (logits.rank() != 2 || logits.dim(0) != count) {
      fail(ErrorKind::kDimension, "classifier returned logits of shape " + shape_string(logits.shape()));
    }
    const std::size_t classes = logits.dim(1);
    auto v = logits.f32();
    for (std::size_t b = 0; b < count; ++b) {
      const auto row = v.subspan(b * classes, classes);
      const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      if (static_cast<int>(pred) == data.labels[first + b]) ++correct;
    }
    r.total_inference_s += seconds;
    if (r.batches > 0) warm_total += seconds;
    ++r.batches;
  }
  r.samples = n;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  r.avg_batch_latency_s = r.batches > 1 ? warm_total / static_cast<double>(r.batches - 1) : r.total_inference_s;
  return r;
}

VariantReport evaluate(const VitModel& model, const Dataset& data, std::size_t batch_size, std::size_t limit) {
  VariantReport r = evaluate_with([&](const Tensor& images) { return forward(model, images); }, data,
                                  batch_size, limit);
  r.analytic_peak_mb = static_cast<double>(estimate_peak(model, batch_size).peak_estimate()) / kBytesPerMb;
  r.flops = count_flops(model, r.samples).total();
  r.weight_bytes = weight_bytes(model);
  return r;
}

Dataset load_pipeline_data(const PipelineConfig& config) {
  if (config.cifar) return load_cifar10(*config.cifar);
  return synthetic_dataset(config.synthetic_samples, config.seed);
}

VitModel load_pipeline_model(const PipelineConfig& config) {
  if (config.checkpoint) return load_checkpoint(*config.checkpoint);
  return init_model(ModelConfig::preset(config.model), config.seed);
}

std::string awq_to_json(const std::vector<AwqSearch>& searches) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& s : searches) {
    nlohmann::ordered_json entry;
    entry["layer"] = s.layer;
    entry["alpha"] = s.alpha;
    entry["mse"] = s.mse;
    out.push_back(std::move(entry));
  }
  return out.dump(2) + "\n";
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  run_stage("config", [&] {
    config.validate();
    return 0;
  });
  const Dataset data = run_stage("data", [&] { return load_pipeline_data(config); });
  const VitModel base = run_stage("model", [&] {
    auto check_fits = [&](const ModelConfig& mc) {
      const auto& shape = data.images.shape();
      if (shape[1] != mc.num_channels || shape[2] != mc.image_size || shape[3] != mc.image_size) {
        fail(ErrorKind::kConfig, "dataset images " + shape_string(shape) + " do not fit the model input size " +
                                     std::to_string(mc.image_size));
      }
    };
    // Presets are checked before the weights are allocated.
    if (!config.checkpoint) check_fits(ModelConfig::preset(config.model));
    VitModel m = load_pipeline_model(config);
    check_fits(m.config);
    return m;
  });

  if (!config.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) fail(ErrorKind::kIo, "cannot create " + config.out_dir.string() + ": " + ec.message());
  }

  PipelineResult result;
  auto record = [&](std::string_view variant, const VitModel& model) {
    result.report.variants[std::string(variant)] =
        run_stage("evaluate", [&] { return evaluate(model, data, config.batch_size, config.eval_samples); });
    result.models.emplace(std::string(variant), model);
  };

  if (wants(config, kVariantFp32)) record(kVariantFp32, base);

  const bool any_pruned = wants(config, kVariantPrunedFp32) || wants(config, kVariantPrunedFp16) ||
                          wants(config, kVariantPrunedInt8);
  if (any_pruned) {
    const CalibrationSet calib =
        run_stage("calibrate", [&] { return data.calibration(config.calib_samples, config.seed); });
    const ActivationStats stats = run_stage("profile", [&] { return profile(base, calib); });
    const VitModel pruned = run_stage("prune", [&] {
      if (config.budget_mb) {
        BudgetOptions options;
        options.percentile = config.prune_percentile;
        options.batch = config.batch_size;
        BudgetResult br = prune_to_budget(base, stats, static_cast<std::uint64_t>(*config.budget_mb * kBytesPerMb),
                                          options);
        result.plan = combine_plans(br.plans);
        return std::move(br.model);
      }
      PruneResult pr = prune_step(base, stats, config.prune_percentile);
      result.plan = std::move(pr.plan);
      return std::move(pr.model);
    });

    if (wants(config, kVariantPrunedFp32)) record(kVariantPrunedFp32, pruned);
    if (wants(config, kVariantPrunedFp16)) {
      const VitModel half = run_stage("fp16", [&] { return to_fp16(pruned, PrecisionPolicy{config.fp16_policy}); });
      record(kVariantPrunedFp16, half);
    }
    if (wants(config, kVariantPrunedInt8)) {
      const VitModel q = run_stage("quantize", [&] {
        const ActivationStats qstats = profile(pruned, calib, config.quant_patterns);
        QuantizeOptions options;
        options.patterns = config.quant_patterns;
        options.dynamic_activation = config.dynamic_activation;
        return quantize_model(pruned, qstats, calib, options, &result.awq);
      });
      record(kVariantPrunedInt8, q);
    }
  }

  if (!config.out_dir.empty()) {
    run_stage("write", [&] {
      write_text(config.out_dir / "report.json", emit_report(result.report, ReportFormat::kJson));
      if (result.plan) write_text(config.out_dir / "plan.json", plan_to_json(*result.plan));
      if (wants(config, kVariantPrunedInt8)) write_text(config.out_dir / "awq.json", awq_to_json(result.awq));
      for (const auto& [variant, model] : result.models) save_checkpoint(model, config.out_dir / (variant + ".eflx"));
      return 0;
    });
  }
  return result;
}

}  // namespace vitslim
