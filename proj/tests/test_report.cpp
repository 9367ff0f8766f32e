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

#include <gtest/gtest.h>

#include "vitslim/report.hpp"

namespace vitslim {
namespace {

BenchReport fixed_report() {
  BenchReport r;
  VariantReport a;
  a.accuracy = 0.0856;
  a.avg_batch_latency_s = 0.194;
  a.total_inference_s = 61.5;
  a.analytic_peak_mb = 2613.0;
  a.flops = 123456789012;
  a.weight_bytes = 2528000000;
  a.samples = 10000;
  a.batches = 313;
  r.variants["fp32"] = a;
  VariantReport b;
  b.accuracy = 1.0 / 3.0;
  b.avg_batch_latency_s = 0.0281234567;
  b.total_inference_s = 8.8;
  b.analytic_peak_mb = 623.0;
  b.measured_peak_mb = 700.25;
  b.flops = 99;
  b.weight_bytes = 623;
  b.samples = 3;
  b.batches = 1;
  r.variants["pruned_int8"] = b;
  return r;
}

TEST(Report, JsonGolden) {
  const std::string expected = R"({
  "variants": {
    "fp32": {
      "accuracy": 0.085600,
      "analytic_peak_mb": 2613.000000,
      "avg_batch_latency_s": 0.194000,
      "batches": 313,
      "flops": 123456789012,
      "measured_peak_mb": null,
      "samples": 10000,
      "total_inference_s": 61.500000,
      "weight_bytes": 2528000000
    },
    "pruned_int8": {
      "accuracy": 0.333333,
      "analytic_peak_mb": 623.000000,
      "avg_batch_latency_s": 0.028123,
      "batches": 1,
      "flops": 99,
      "measured_peak_mb": 700.250000,
      "samples": 3,
      "total_inference_s": 8.800000,
      "weight_bytes": 623
    }
  }
}
)";
  EXPECT_EQ(emit_report(fixed_report(), ReportFormat::kJson), expected);
}

TEST(Report, TableGolden) {
  const std::string expected =
      "variant       accuracy%  avg_latency_s   total_time_s      peak_mb            flops   weight_bytes\n"
      "fp32               8.56       0.194000      61.500000     2613.000     123456789012     2528000000\n"
      "pruned_int8       33.33       0.028123       8.800000      623.000               99            623\n";
  EXPECT_EQ(emit_report(fixed_report(), ReportFormat::kTable), expected);
}

TEST(Report, EmptyReport) {
  EXPECT_EQ(emit_report(BenchReport{}, ReportFormat::kJson), "{\n  \"variants\": {}\n}\n");
  EXPECT_EQ(emit_report(BenchReport{}, ReportFormat::kTable).find('\n') + 1,
            emit_report(BenchReport{}, ReportFormat::kTable).size());
}

TEST(Report, TableRowPerVariantInCanonicalOrder) {
  BenchReport r;
  for (const auto& v : all_variants()) r.variants[v] = VariantReport{};
  const std::string table = emit_report(r, ReportFormat::kTable);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
  EXPECT_LT(table.find("pruned_fp32"), table.find("pruned_fp16"));
  EXPECT_LT(table.find("pruned_fp16"), table.find("pruned_int8"));
}

TEST(Report, WithoutTimingClearsOnlyTiming) {
  const BenchReport r = without_timing(fixed_report());
  const VariantReport& v = r.variants.at("pruned_int8");
  EXPECT_EQ(v.avg_batch_latency_s, 0.0);
  EXPECT_EQ(v.total_inference_s, 0.0);
  EXPECT_FALSE(v.measured_peak_mb.has_value());
  EXPECT_EQ(v.flops, 99u);
  EXPECT_DOUBLE_EQ(v.accuracy, 1.0 / 3.0);
}

}  // namespace
}  // namespace vitslim
