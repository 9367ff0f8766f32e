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

#include "vitslim/error.hpp"

namespace vitslim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension:
      return "dimension error";
    case ErrorKind::kConfig:
      return "config error";
    case ErrorKind::kInput:
      return "input error";
    case ErrorKind::kPrecisionState:
      return "precision-state error";
    case ErrorKind::kUnsupportedCast:
      return "unsupported-cast error";
    case ErrorKind::kLookup:
      return "lookup error";
    case ErrorKind::kFormat:
      return "format error";
    case ErrorKind::kIo:
      return "I/O error";
    case ErrorKind::kBudgetInfeasible:
      return "budget-infeasible error";
    case ErrorKind::kInvariant:
      return "invariant violation";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

BudgetInfeasibleError::BudgetInfeasibleError(const std::string& message,
                                             std::uint64_t best_peak_bytes)
    : Error(ErrorKind::kBudgetInfeasible, message), best_peak_bytes_(best_peak_bytes) {}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kLookup:
    case ErrorKind::kPrecisionState:
    case ErrorKind::kUnsupportedCast:
      return 1;
    case ErrorKind::kDimension:
    case ErrorKind::kInput:
    case ErrorKind::kFormat:
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kBudgetInfeasible:
      return 3;
    case ErrorKind::kInvariant:
      return 4;
  }
  return 4;
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace vitslim
