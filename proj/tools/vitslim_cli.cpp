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

// Command-line front end. Shared pipeline settings live on the top-level
// command so a --config file can set them with plain "key = value" lines;
// flags given on the command line override the file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vitslim/checkpoint.hpp"
#include "vitslim/error.hpp"
#include "vitslim/pipeline.hpp"
#include "vitslim/precision.hpp"
#include "vitslim/profiler.hpp"
#include "vitslim/pruner.hpp"
#include "vitslim/quantizer.hpp"
#include "vitslim/report.hpp"

namespace {

using namespace vitslim;

struct Settings {
  PipelineConfig config;
  std::string checkpoint;
  std::string cifar;
  std::string out_dir;
  double budget_mb = 0.0;
  std::string format = "table";

  PipelineConfig resolved() const {
    PipelineConfig c = config;
    if (!checkpoint.empty()) c.checkpoint = checkpoint;
    if (!cifar.empty()) c.cifar = cifar;
    if (budget_mb > 0.0) c.budget_mb = budget_mb;
    c.out_dir = out_dir;
    return c;
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::kIo, "failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ReportFormat parse_format(const std::string& f) {
  if (f == "json") return ReportFormat::kJson;
  if (f == "table") return ReportFormat::kTable;
  fail(ErrorKind::kConfig, "unknown report format '" + f + "'");
}

CalibrationSet calibration_for(const PipelineConfig& c) {
  return load_pipeline_data(c).calibration(c.calib_samples, c.seed);
}

void add_settings(CLI::App& app, Settings& s) {
  PipelineConfig& c = s.config;
  app.add_option("--model", c.model, "Model preset: vit-toy or vit-huge")->capture_default_str();
  app.add_option("--checkpoint", s.checkpoint, "Input checkpoint (overrides --model)");
  app.add_option("--calib_samples", c.calib_samples, "Calibration samples")->capture_default_str();
  app.add_option("--batch_size", c.batch_size, "Batch size")->capture_default_str();
  app.add_option("--prune_percentile", c.prune_percentile, "Fraction of MLP channels pruned per step")
      ->capture_default_str();
  app.add_option("--budget_mb", s.budget_mb, "Peak memory budget in MB (1e6 bytes); unset prunes one step");
  app.add_option("--fp16_policy", c.fp16_policy, "Glob patterns of linears stored as FP16")->capture_default_str();
  app.add_option("--quant_patterns", c.quant_patterns, "Glob patterns of linears quantized to INT8")
      ->capture_default_str();
  app.add_flag("--dynamic_activation", c.dynamic_activation, "Per-batch activation scales for INT8 layers");
  app.add_option("--seed", c.seed, "Seed for init, synthetic data and calibration sampling")->capture_default_str();
  app.add_option("--variants", c.variants, "Variants to evaluate")->capture_default_str();
  app.add_option("--cifar", s.cifar, "CIFAR-10 batch file or directory (default: synthetic data)");
  app.add_option("--synthetic_samples", c.synthetic_samples, "Synthetic dataset size")->capture_default_str();
  app.add_option("--eval_samples", c.eval_samples, "Evaluate only the first n samples (0 = all)")
      ->capture_default_str();
  app.add_option("--format", s.format, "Report format on stdout: table or json")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Profiling, pruning, FP16 and INT8 compression for ViT models"};
  app.set_config("--config", "", "Key/value config file; command-line flags take precedence");
  app.require_subcommand(1);
  Settings s;
  add_settings(app, s);

  std::string output, stats_path, plan_path, awq_path;
  std::string label = "fp32";
  std::size_t count = 8;

  auto* profile_cmd = app.add_subcommand("profile", "Write per-channel activation statistics as JSON");
  profile_cmd->add_option("-o,--output", output, "Statistics file")->required();

  auto* prune_cmd = app.add_subcommand("prune", "Prune MLP channels once, or down to --budget_mb");
  prune_cmd->add_option("-o,--output", output, "Pruned checkpoint")->required();
  prune_cmd->add_option("--stats", stats_path, "Statistics from 'profile' (default: profile now)");
  prune_cmd->add_option("--plan", plan_path, "Where to write the pruning plan");

  auto* fp16_cmd = app.add_subcommand("fp16", "Store the linears matched by --fp16_policy as FP16");
  fp16_cmd->add_option("-o,--output", output, "Output checkpoint")->required();

  auto* quant_cmd = app.add_subcommand("quantize", "AWQ INT8 quantization of the linears matched by --quant_patterns");
  quant_cmd->add_option("-o,--output", output, "Output checkpoint")->required();
  quant_cmd->add_option("--awq", awq_path, "Where to write the per-layer alpha search");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one model and print a report");
  eval_cmd->add_option("--label", label, "Variant name in the report")->capture_default_str();

  auto* pipeline_cmd = app.add_subcommand("pipeline", "profile -> prune -> {fp16, int8} -> evaluate");
  pipeline_cmd->add_option("--out_dir", s.out_dir, "Artifact directory");

  auto* dump_cmd = app.add_subcommand("dump-samples", "Write calibration samples as PPM images");
  dump_cmd->add_option("-o,--output", output, "Output directory")->required();
  dump_cmd->add_option("-k,--count", count, "Number of samples")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::kConfig);
  }

  try {
    const PipelineConfig config = s.resolved();
    config.validate();
    if (profile_cmd->parsed()) {
      const VitModel model = load_pipeline_model(config);
      write_file(output, stats_to_json(profile(model, calibration_for(config))));
    } else if (prune_cmd->parsed()) {
      const VitModel model = load_pipeline_model(config);
      const ActivationStats stats = stats_path.empty() ? profile(model, calibration_for(config))
                                                       : stats_from_json(read_file(stats_path));
      VitModel pruned;
      PruningPlan plan;
      if (config.budget_mb) {
        BudgetOptions options;
        options.percentile = config.prune_percentile;
        options.batch = config.batch_size;
        BudgetResult r = prune_to_budget(model, stats, static_cast<std::uint64_t>(*config.budget_mb * 1e6), options);
        pruned = std::move(r.model);
        plan = combine_plans(r.plans);
      } else {
        PruneResult r = prune_step(model, stats, config.prune_percentile);
        pruned = std::move(r.model);
        plan = std::move(r.plan);
      }
      save_checkpoint(pruned, output);
      if (!plan_path.empty()) write_file(plan_path, plan_to_json(plan));
    } else if (fp16_cmd->parsed()) {
      save_checkpoint(to_fp16(load_pipeline_model(config), PrecisionPolicy{config.fp16_policy}), output);
    } else if (quant_cmd->parsed()) {
      const VitModel model = load_pipeline_model(config);
      const CalibrationSet calib = calibration_for(config);
      const ActivationStats stats = profile(model, calib, config.quant_patterns);
      QuantizeOptions options;
      options.patterns = config.quant_patterns;
      options.dynamic_activation = config.dynamic_activation;
      std::vector<AwqSearch> searches;
      save_checkpoint(quantize_model(model, stats, calib, options, &searches), output);
      if (!awq_path.empty()) write_file(awq_path, awq_to_json(searches));
    } else if (eval_cmd->parsed()) {
      BenchReport report;
      report.variants[label] =
          evaluate(load_pipeline_model(config), load_pipeline_data(config), config.batch_size, config.eval_samples);
      std::cout << emit_report(report, parse_format(s.format));
    } else if (pipeline_cmd->parsed()) {
      const PipelineResult result = run_pipeline(config);
      std::cout << emit_report(result.report, parse_format(s.format));
    } else if (dump_cmd->parsed()) {
      for (std::size_t idx : dump_samples(calibration_for(config), count, output, config.seed)) {
        std::cout << "sample_" << idx << ".ppm\n";
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "vitslim: %s: %s\n", std::string(to_string(e.kind())).c_str(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vitslim: internal error: %s\n", e.what());
    return exit_code(ErrorKind::kInvariant);
  }
  return 0;
}
