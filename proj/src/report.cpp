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

#include "vitslim/report.hpp"

#include <algorithm>
#include <cstdio>

namespace vitslim {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string emit_json(const BenchReport& report) {
  if (report.variants.empty()) return "{\n  \"variants\": {}\n}\n";
  std::string out = "{\n  \"variants\": {\n";
  std::size_t i = 0;
  for (const auto& [name, v] : report.variants) {
    // Members listed in lexicographic order.
    const std::vector<std::pair<std::string, std::string>> members = {
        {"accuracy", fixed6(v.accuracy)},
        {"analytic_peak_mb", fixed6(v.analytic_peak_mb)},
        {"avg_batch_latency_s", fixed6(v.avg_batch_latency_s)},
        {"batches", std::to_string(v.batches)},
        {"flops", std::to_string(v.flops)},
        {"measured_peak_mb", v.measured_peak_mb ? fixed6(*v.measured_peak_mb) : "null"},
        {"samples", std::to_string(v.samples)},
        {"total_inference_s", fixed6(v.total_inference_s)},
        {"weight_bytes", std::to_string(v.weight_bytes)},
    };
    out += "    \"" + name + "\": {\n";
    for (std::size_t m = 0; m < members.size(); ++m) {
      out += "      \"" + members[m].first + "\": " + members[m].second;
      out += m + 1 < members.size() ? ",\n" : "\n";
    }
    out += ++i < report.variants.size() ? "    },\n" : "    }\n";
  }
  out += "  }\n}\n";
  return out;
}

std::string emit_table(const BenchReport& report) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %10s %14s %14s %12s %16s %14s\n", "variant", "accuracy%",
                "avg_latency_s", "total_time_s", "peak_mb", "flops", "weight_bytes");
  std::string out = line;
  // Rows follow the canonical variant order, then any others by name.
  std::vector<std::string> names;
  for (const auto& v : all_variants()) {
    if (report.variants.count(v)) names.push_back(v);
  }
  for (const auto& [name, v] : report.variants) {
    if (!is_variant(name)) names.push_back(name);
  }
  for (const auto& name : names) {
    const VariantReport& v = report.variants.at(name);
    std::snprintf(line, sizeof(line), "%-12s %10.2f %14.6f %14.6f %12.3f %16llu %14llu\n", name.c_str(),
                  v.accuracy * 100.0, v.avg_batch_latency_s, v.total_inference_s, v.analytic_peak_mb,
                  static_cast<unsigned long long>(v.flops), static_cast<unsigned long long>(v.weight_bytes));
    out += line;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& all_variants() {
  static const std::vector<std::string> kAll = {std::string(kVariantFp32), std::string(kVariantPrunedFp32),
                                                std::string(kVariantPrunedFp16), std::string(kVariantPrunedInt8)};
  return kAll;
}

bool is_variant(std::string_view name) {
  const auto& all = all_variants();
  return std::find(all.begin(), all.end(), name) != all.end();
}

std::string emit_report(const BenchReport& report, ReportFormat format) {
  return format == ReportFormat::kJson ? emit_json(report) : emit_table(report);
}

BenchReport without_timing(const BenchReport& report) {
  BenchReport out = report;
  for (auto& [name, v] : out.variants) {
    v.avg_batch_latency_s = 0.0;
    v.total_inference_s = 0.0;
    v.measured_peak_mb.reset();
  }
  return out;
}

}  // namespace vitslim
