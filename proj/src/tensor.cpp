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

#include "vitslim/tensor.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "vitslim/error.hpp"

namespace vitslim {

static_assert(std::endian::native == std::endian::little,
              "payload serialization assumes a little-endian host");

const char* dtype_name(Dtype dtype) {
  switch (dtype) {
    case Dtype::kF32:
      return "f32";
    case Dtype::kF16:
      return "f16";
    case Dtype::kI8:
      return "i8";
  }
  return "?";
}

Dtype parse_dtype(const std::string& name) {
  if (name == "f32") return Dtype::kF32;
  if (name == "f16") return Dtype::kF16;
  if (name == "i8") return Dtype::kI8;
  fail(ErrorKind::kFormat, "unknown dtype '" + name + "'");
}

std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) fail(ErrorKind::kDimension, "tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    if (d == 0) fail(ErrorKind::kDimension, "tensor dimensions must be positive, got " + shape_string(shape));
  }
}

void check_count(const Shape& shape, std::size_t count) {
  check_shape(shape);
  if (shape_numel(shape) != count) {
    fail(ErrorKind::kDimension, "shape " + shape_string(shape) + " needs " +
                                    std::to_string(shape_numel(shape)) + " elements, got " +
                                    std::to_string(count));
  }
}

[[noreturn]] void wrong_dtype(Dtype have, Dtype want) {
  fail(ErrorKind::kPrecisionState,
       std::string("tensor is ") + dtype_name(have) + ", expected " + dtype_name(want));
}

}  // namespace

Tensor::Tensor(Shape shape, Dtype dtype) : shape_(std::move(shape)), dtype_(dtype) {
  check_shape(shape_);
  const std::size_t n = shape_numel(shape_);
  switch (dtype_) {
    case Dtype::kF32:
      data_ = std::vector<float>(n, 0.0f);
      break;
    case Dtype::kF16:
      data_ = std::vector<Half>(n);
      break;
    case Dtype::kI8:
      data_ = std::vector<std::int8_t>(n, 0);
      break;
  }
}

Tensor Tensor::from_f32(Shape shape, std::vector<float> values) {
  check_count(shape, values.size());
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = Dtype::kF32;
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::from_f16(Shape shape, std::vector<Half> values) {
  check_count(shape, values.size());
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = Dtype::kF16;
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::from_i8(Shape shape, std::vector<std::int8_t> values) {
  check_count(shape, values.size());
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = Dtype::kI8;
  t.data_ = std::move(values);
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    fail(ErrorKind::kDimension, "axis " + std::to_string(axis) + " out of range for shape " +
                                    shape_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::numel() const noexcept { return shape_numel(shape_); }

std::span<const float> Tensor::f32() const {
  if (dtype_ != Dtype::kF32) wrong_dtype(dtype_, Dtype::kF32);
  return std::get<std::vector<float>>(data_);
}

std::span<float> Tensor::f32() {
  if (dtype_ != Dtype::kF32) wrong_dtype(dtype_, Dtype::kF32);
  return std::get<std::vector<float>>(data_);
}

std::span<const Half> Tensor::f16() const {
  if (dtype_ != Dtype::kF16) wrong_dtype(dtype_, Dtype::kF16);
  return std::get<std::vector<Half>>(data_);
}

std::span<Half> Tensor::f16() {
  if (dtype_ != Dtype::kF16) wrong_dtype(dtype_, Dtype::kF16);
  return std::get<std::vector<Half>>(data_);
}

std::span<const std::int8_t> Tensor::i8() const {
  if (dtype_ != Dtype::kI8) wrong_dtype(dtype_, Dtype::kI8);
  return std::get<std::vector<std::int8_t>>(data_);
}

std::span<std::int8_t> Tensor::i8() {
  if (dtype_ != Dtype::kI8) wrong_dtype(dtype_, Dtype::kI8);
  return std::get<std::vector<std::int8_t>>(data_);
}

float Tensor::value_at(std::size_t index) const {
  switch (dtype_) {
    case Dtype::kF32:
      return f32()[index];
    case Dtype::kF16:
      return half_to_float(f16()[index]);
    case Dtype::kI8:
      return static_cast<float>(i8()[index]);
  }
  return 0.0f;
}

Tensor Tensor::reshaped(Shape shape) const {
  check_count(shape, numel());
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

std::vector<std::byte> Tensor::to_bytes() const {
  std::vector<std::byte> out(byte_size());
  if (out.empty()) return out;
  std::visit([&](const auto& v) { std::memcpy(out.data(), v.data(), out.size()); }, data_);
  return out;
}

Tensor Tensor::from_bytes(Shape shape, Dtype dtype, std::span<const std::byte> bytes) {
  check_shape(shape);
  const std::size_t n = shape_numel(shape);
  if (bytes.size() != n * bytes_per_element(dtype)) {
    fail(ErrorKind::kFormat, "payload of " + std::to_string(bytes.size()) + " bytes does not match " +
                                 dtype_name(dtype) + shape_string(shape));
  }
  Tensor t(std::move(shape), dtype);
  std::visit([&](auto& v) { std::memcpy(v.data(), bytes.data(), bytes.size()); }, t.data_);
  return t;
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (shape_ != other.shape_ || dtype_ != other.dtype_) return false;
  return to_bytes() == other.to_bytes();
}

Tensor as_f32(const Tensor& t) {
  if (t.dtype() == Dtype::kF32) return t;
  if (t.dtype() == Dtype::kF16) {
    auto src = t.f16();
    std::vector<float> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = half_to_float(src[i]);
    return Tensor::from_f32(t.shape(), std::move(out));
  }
  fail(ErrorKind::kUnsupportedCast, "i8 tensors can only be widened through their quantization scales");
}

}  // namespace vitslim
