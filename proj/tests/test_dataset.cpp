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

#include <filesystem>
#include <algorithm>
#include <fstream>

#include <gtest/gtest.h>

#include "vitslim/dataset.hpp"
#include "vitslim/error.hpp"

namespace vitslim {
namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kInvariant;
}

std::vector<std::uint8_t> record(std::uint8_t label, std::uint8_t fill) {
  std::vector<std::uint8_t> r(kCifarRecord, fill);
  r[0] = label;
  return r;
}

TEST(Cifar, SingleWhiteRecord) {
  const Dataset ds = parse_cifar10(record(3, 255), "mem");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.labels[0], 3);
  EXPECT_EQ(ds.images.shape(), (Shape{1, 3, 32, 32}));
  for (float v : ds.images.f32()) ASSERT_EQ(v, 1.0f);
}

TEST(Cifar, PlaneOrder) {
  std::vector<std::uint8_t> r(kCifarRecord, 0);
  r[0] = 9;
  r[1 + 0] = 255;                 // R, row 0, col 0
  r[1 + 1024 + 32 + 5] = 255;     // G, row 1, col 5
  r[1 + 2048 + 31 * 32 + 31] = 0; // B, last pixel stays black
  const Dataset ds = parse_cifar10(r, "mem");
  auto v = ds.images.f32();
  EXPECT_EQ(v[0], 1.0f);
  EXPECT_EQ(v[1024 + 37], 1.0f);
  EXPECT_EQ(v[1], -1.0f);
  EXPECT_EQ(v[3071], -1.0f);
}

TEST(Cifar, Errors) {
  auto two = record(1, 0);
  const auto second = record(2, 0);
  two.insert(two.end(), second.begin(), second.end() - 10);
  try {
    parse_cifar10(two, "mem");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_NE(std::string(e.what()).find("offset 3073"), std::string::npos) << e.what();
  }
  EXPECT_EQ(kind_of([] { parse_cifar10(record(10, 0), "mem"); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([] { parse_cifar10({}, "mem"); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([] { load_cifar10("/nonexistent/vitslim"); }), ErrorKind::kIo);
}

TEST(Cifar, LoadsFromDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "vitslim_cifar_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "test_batch.bin", std::ios::binary);
    for (std::uint8_t l = 0; l < 4; ++l) {
      const auto r = record(l, static_cast<std::uint8_t>(l * 60));
      out.write(reinterpret_cast<const char*>(r.data()), static_cast<std::streamsize>(r.size()));
    }
  }
  const Dataset ds = load_cifar10(dir);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(ds.images.f32()[3 * 3072], normalize_pixel(180));
  std::filesystem::remove_all(dir);
}

TEST(Synthetic, DeterministicAndBalanced) {
  const Dataset a = synthetic_dataset(32, 0), b = synthetic_dataset(32, 0);
  EXPECT_TRUE(a.images.bitwise_equal(b.images));
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_FALSE(a.images.bitwise_equal(synthetic_dataset(32, 1).images));

  const Dataset big = synthetic_dataset(1003, 5);
  std::vector<int> counts(10, 0);
  for (int l : big.labels) ++counts[static_cast<std::size_t>(l)];
  EXPECT_EQ(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()), 1);

  EXPECT_EQ(synthetic_dataset(1, 0).size(), 1u);
  EXPECT_EQ(kind_of([] { synthetic_dataset(0, 0); }), ErrorKind::kInput);
}

TEST(Dataset, CalibrationIsSeededSelection) {
  const Dataset ds = synthetic_dataset(50, 3);
  const CalibrationSet a = ds.calibration(8, 1), b = ds.calibration(8, 1);
  EXPECT_TRUE(a.images.bitwise_equal(b.images));
  EXPECT_EQ(a.size(), 8u);
  // Every calibration image is one of the dataset images.
  for (std::size_t i = 0; i < 8; ++i) {
    bool found = false;
    for (std::size_t j = 0; j < 50 && !found; ++j) {
      found = std::equal(a.images.f32().begin() + i * 3072, a.images.f32().begin() + (i + 1) * 3072,
                         ds.images.f32().begin() + j * 3072) &&
              a.labels[i] == ds.labels[j];
    }
    EXPECT_TRUE(found) << i;
  }
  EXPECT_EQ(kind_of([&] { ds.calibration(51, 0); }), ErrorKind::kConfig);
  const Tensor batch = ds.batch_images(10, 5);
  EXPECT_EQ(batch.shape(), (Shape{5, 3, 32, 32}));
  EXPECT_EQ(kind_of([&] { ds.batch_images(48, 5); }), ErrorKind::kInput);
}

}  // namespace
}  // namespace vitslim
