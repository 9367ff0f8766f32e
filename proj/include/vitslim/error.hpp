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

#ifndef VITSLIM_ERROR_HPP_
#define VITSLIM_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vitslim {

enum class ErrorKind {
  kDimension,
  kConfig,
  kInput,
  kPrecisionState,
  kUnsupportedCast,
  kLookup,
  kFormat,
  kIo,
  kBudgetInfeasible,
  kInvariant,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class BudgetInfeasibleError : public Error {
 public:
  BudgetInfeasibleError(const std::string& message, std::uint64_t best_peak_bytes);

  /// Smallest peak estimate reachable before every layer hit its channel floor.
  std::uint64_t best_peak_bytes() const noexcept { return best_peak_bytes_; }

 private:
  std::uint64_t best_peak_bytes_;
};

/// Process exit code for a failure: 1 config, 2 data/format, 3 budget, 4 internal.
int exit_code(ErrorKind kind);

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace vitslim

#endif  // VITSLIM_ERROR_HPP_
