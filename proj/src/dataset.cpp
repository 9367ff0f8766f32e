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

#include "vitslim/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>

#include "vitslim/error.hpp"
#include "vitslim/rng.hpp"

namespace vitslim {

Tensor Dataset::batch_images(std::size_t first, std::size_t count) const {
  if (first + count > size() || count == 0) fail(ErrorKind::kInput, "batch range out of bounds");
  const std::size_t per = images.numel() / images.dim(0);
  auto src = images.f32();
  std::vector<float> out(src.begin() + static_cast<std::ptrdiff_t>(first * per),
                         src.begin() + static_cast<std::ptrdiff_t>((first + count) * per));
  Shape shape = images.shape();
  shape[0] = count;
  return Tensor::from_f32(std::move(shape), std::move(out));
}

CalibrationSet Dataset::calibration(std::size_t n, std::uint64_t seed) const {
  if (n == 0) fail(ErrorKind::kInput, "calibration set needs at least one sample");
  if (n > size()) {
    fail(ErrorKind::kConfig, "asked for " + std::to_string(n) + " calibration samples from " +
                                 std::to_string(size()));
  }
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.below(size() - i)]);

  const std::size_t per = images.numel() / images.dim(0);
  auto src = images.f32();
  std::vector<float> pixels;
  pixels.reserve(n * per);
  CalibrationSet calib;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = src.begin() + static_cast<std::ptrdiff_t>(order[i] * per);
    pixels.insert(pixels.end(), it, it + static_cast<std::ptrdiff_t>(per));
    calib.labels.push_back(labels[order[i]]);
  }
  Shape shape = images.shape();
  shape[0] = n;
  calib.images = Tensor::from_f32(std::move(shape), std::move(pixels));
  return calib;
}

Dataset parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.empty()) fail(ErrorKind::kFormat, source + ": empty CIFAR-10 file");
  if (bytes.size() % kCifarRecord != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kCifarRecord;
    fail(ErrorKind::kFormat, source + ": truncated record at offset " + std::to_string(offset) + " (file size " +
                                 std::to_string(bytes.size()) + " is not a multiple of 3073)");
  }
  const std::size_t n = bytes.size() / kCifarRecord;
  Dataset ds;
  ds.source = "cifar10-binary:" + source;
  ds.labels.resize(n);
  std::vector<float> pixels(n * kCifarPixels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t offset = i * kCifarRecord;
    const std::uint8_t label = bytes[offset];
    if (label >= kCifarClasses) {
      fail(ErrorKind::kFormat, source + ": label " + std::to_string(label) + " at offset " +
                                   std::to_string(offset) + " is outside [0, 9]");
    }
    ds.labels[i] = label;
    for (std::size_t p = 0; p < kCifarPixels; ++p) {
      pixels[i * kCifarPixels + p] = normalize_pixel(bytes[offset + 1 + p]);
    }
  }
  ds.images = Tensor::from_f32({n, 3, kCifarSide, kCifarSide}, std::move(pixels));
  return ds;
}

Dataset load_cifar10(const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(path)) file = path / "test_batch.bin";
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open CIFAR-10 file " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_cifar10(bytes, file.string());
}

Dataset synthetic_dataset(std::size_t n, std::uint64_t seed, std::size_t image_size) {
  if (n == 0) fail(ErrorKind::kInput, "synthetic dataset needs n >= 1");
  if (image_size == 0) fail(ErrorKind::kConfig, "image size must be positive");
  Rng rng(seed);
  const std::size_t per = 3 * image_size * image_size;
  Dataset ds;
  ds.source = "synthetic(" + std::to_string(seed) + ")";
  ds.labels.resize(n);
  std::vector<float> pixels(n * per);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = static_cast<int>(i % kCifarClasses);
    for (std::size_t p = 0; p < per; ++p) {
      pixels[i * per + p] = normalize_pixel(static_cast<std::uint8_t>(rng.next() & 0xffu));
    }
  }
  ds.images = Tensor::from_f32({n, 3, image_size, image_size}, std::move(pixels));
  return ds;
}

}  // namespace vitslim
