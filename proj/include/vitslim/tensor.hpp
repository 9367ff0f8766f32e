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

#ifndef VITSLIM_TENSOR_HPP_
#define VITSLIM_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vitslim/half.hpp"

namespace vitslim {

enum class Dtype { kF32, kF16, kI8 };

constexpr std::size_t bytes_per_element(Dtype dtype) {
  switch (dtype) {
    case Dtype::kF32:
      return 4;
    case Dtype::kF16:
      return 2;
    case Dtype::kI8:
      return 1;
  }
  return 0;
}

/// "f32" / "f16" / "i8", as used in checkpoint headers.
const char* dtype_name(Dtype dtype);
Dtype parse_dtype(const std::string& name);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array. Owns its buffer; copies are deep.
///
/// A default-constructed tensor is empty (rank 0, no elements) and is used
/// as the "absent" marker for linear weights that were replaced by their
/// quantized form.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor. Every dimension must be positive.
  Tensor(Shape shape, Dtype dtype);

  static Tensor from_f32(Shape shape, std::vector<float> values);
  static Tensor from_f16(Shape shape, std::vector<Half> values);
  static Tensor from_i8(Shape shape, std::vector<std::int8_t> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const noexcept { return shape_.size(); }
  Dtype dtype() const noexcept { return dtype_; }
  std::size_t numel() const noexcept;
  bool empty() const noexcept { return shape_.empty(); }

  /// product(shape) * bytes_per_element(dtype). The only tensor-memory
  /// definition used anywhere in the library.
  std::size_t byte_size() const noexcept { return numel() * bytes_per_element(dtype_); }

  // Typed views. Requesting the wrong dtype throws a precision-state error.
  std::span<const float> f32() const;
  std::span<float> f32();
  std::span<const Half> f16() const;
  std::span<Half> f16();
  std::span<const std::int8_t> i8() const;
  std::span<std::int8_t> i8();

  /// Element i widened to float. F16 is exact; I8 returns the raw integer.
  float value_at(std::size_t index) const;

  /// Same data, new shape with identical element count.
  Tensor reshaped(Shape shape) const;

  /// Little-endian raw payload, exactly byte_size() bytes.
  std::vector<std::byte> to_bytes() const;
  static Tensor from_bytes(Shape shape, Dtype dtype, std::span<const std::byte> bytes);

  /// Same shape, dtype and bit pattern.
  bool bitwise_equal(const Tensor& other) const;

 private:
  Shape shape_;
  Dtype dtype_ = Dtype::kF32;
  std::variant<std::vector<float>, std::vector<Half>, std::vector<std::int8_t>> data_;
};

/// Tensor of float values, converted exactly if the source is F16.
Tensor as_f32(const Tensor& t);

}  // namespace vitslim

#endif  // VITSLIM_TENSOR_HPP_
