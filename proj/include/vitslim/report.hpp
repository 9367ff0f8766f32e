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

#ifndef VITSLIM_REPORT_HPP_
#define VITSLIM_REPORT_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vitslim {

inline constexpr std::string_view kVariantFp32 = "fp32";
inline constexpr std::string_view kVariantPrunedFp32 = "pruned_fp32";
inline constexpr std::string_view kVariantPrunedFp16 = "pruned_fp16";
inline constexpr std::string_view kVariantPrunedInt8 = "pruned_int8";

/// The four variants in canonical order.
const std::vector<std::string>& all_variants();
bool is_variant(std::string_view name);

struct VariantReport {
  double accuracy = 0.0;
  double avg_batch_latency_s = 0.0;
  double total_inference_s = 0.0;
  double analytic_peak_mb = 0.0;  // 1 MB = 1e6 bytes
  std::optional<double> measured_peak_mb;
  std::uint64_t flops = 0;
  std::uint64_t weight_bytes = 0;
  std::size_t samples = 0;
  std::size_t batches = 0;
};

struct BenchReport {
  std::map<std::string, VariantReport> variants;
};

enum class ReportFormat { kJson, kTable };

/// JSON: keys in lexicographic order, reals printed with six decimals, one
/// member per line. Table: a header row and one row per variant.
std::string emit_report(const BenchReport& report, ReportFormat format);

/// Copy with the timing fields (latency, total time, measured peak) zeroed,
/// for comparing runs.
BenchReport without_timing(const BenchReport& report);

}  // namespace vitslim

#endif  // VITSLIM_REPORT_HPP_
