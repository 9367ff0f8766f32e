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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vitslim/error.hpp"
#include "vitslim/half.hpp"
#include "vitslim/ops.hpp"
#include "vitslim/tensor.hpp"

namespace vitslim {
namespace {

using testing::random_tensor;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kInvariant;
}

TEST(Tensor, ByteSizeFollowsDtype) {
  EXPECT_EQ(Tensor({3, 5}, Dtype::kF32).byte_size(), 60u);
  EXPECT_EQ(Tensor({3, 5}, Dtype::kF16).byte_size(), 30u);
  EXPECT_EQ(Tensor({3, 5}, Dtype::kI8).byte_size(), 15u);
  EXPECT_TRUE(Tensor().empty());
  EXPECT_EQ(Tensor().byte_size(), 0u);
}

TEST(Tensor, WrongViewIsPrecisionStateError) {
  const Tensor t({2}, Dtype::kF16);
  EXPECT_EQ(kind_of([&] { (void)t.f32(); }), ErrorKind::kPrecisionState);
  EXPECT_EQ(kind_of([&] { (void)t.i8(); }), ErrorKind::kPrecisionState);
}

TEST(Tensor, BytesRoundTrip) {
  const Tensor a = random_tensor({4, 3}, 1);
  const Tensor b = Tensor::from_bytes(a.shape(), a.dtype(), a.to_bytes());
  EXPECT_TRUE(a.bitwise_equal(b));
  const Tensor h = ops::cast(a, Dtype::kF16);
  EXPECT_TRUE(h.bitwise_equal(Tensor::from_bytes(h.shape(), Dtype::kF16, h.to_bytes())));
  EXPECT_EQ(kind_of([&] { Tensor::from_bytes({4, 4}, Dtype::kF32, a.to_bytes()); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { a.reshaped({5}); }), ErrorKind::kDimension);
}

TEST(Ops, MatmulMatchesNaiveLoopBitwise) {
  const Tensor a = random_tensor({7, 13}, 2), b = random_tensor({13, 5}, 3);
  const Tensor c = ops::matmul(a, b);
  auto av = a.f32(), bv = b.f32(), cv = c.f32();
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      float acc = 0.0f;
      for (std::size_t k = 0; k < 13; ++k) acc += av[i * 13 + k] * bv[k * 5 + j];
      EXPECT_EQ(cv[i * 5 + j], acc);
    }
}

TEST(Ops, LinearWithF16WeightsWidensExactly) {
  const Tensor x = random_tensor({2, 3, 8}, 4), w = random_tensor({6, 8}, 5), b = random_tensor({6}, 6);
  const Tensor wh = ops::cast(w, Dtype::kF16);
  const Tensor y = ops::linear(x, wh, b);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 6}));
  auto xv = x.f32(), bv = b.f32(), yv = y.f32();
  auto whv = wh.f16();
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t o = 0; o < 6; ++o) {
      float acc = 0.0f;
      for (std::size_t k = 0; k < 8; ++k) acc += xv[r * 8 + k] * half_to_float(whv[o * 8 + k]);
      EXPECT_EQ(yv[r * 6 + o], acc + bv[o]);
    }
}

TEST(Ops, MatmulShapeMismatch) {
  EXPECT_EQ(kind_of([] { ops::matmul(Tensor({2, 3}, Dtype::kF32), Tensor({4, 2}, Dtype::kF32)); }),
            ErrorKind::kDimension);
}

TEST(Ops, LayerNormAgainstDoubleOracle) {
  const Tensor x = random_tensor({5, 16}, 7, 3.0f), g = random_tensor({16}, 8), b = random_tensor({16}, 9);
  const Tensor y = ops::layernorm(x, g, b);
  auto xv = x.f32(), gv = g.f32(), bv = b.f32(), yv = y.f32();
  for (std::size_t r = 0; r < 5; ++r) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < 16; ++i) mean += xv[r * 16 + i];
    mean /= 16;
    for (std::size_t i = 0; i < 16; ++i) var += (xv[r * 16 + i] - mean) * (xv[r * 16 + i] - mean);
    var /= 16;
    for (std::size_t i = 0; i < 16; ++i) {
      const double ref = (xv[r * 16 + i] - mean) / std::sqrt(var + 1e-6) * gv[i] + bv[i];
      EXPECT_NEAR(yv[r * 16 + i], ref, 1e-5);
    }
  }
}

TEST(Ops, LayerNormReturnsF32ForF16Input) {
  const Tensor x = ops::cast(random_tensor({2, 4}, 10), Dtype::kF16);
  const Tensor y = ops::layernorm(x, Tensor::from_f32({4}, {1, 1, 1, 1}), Tensor({4}, Dtype::kF32));
  EXPECT_EQ(y.dtype(), Dtype::kF32);
}

TEST(Ops, SoftmaxRowsAgainstDoubleOracle) {
  const Tensor x = random_tensor({3, 4, 9}, 11, 4.0f);
  const Tensor y = ops::softmax(x, 2);
  auto xv = x.f32(), yv = y.f32();
  for (std::size_t r = 0; r < 12; ++r) {
    double mx = -1e30, z = 0;
    for (std::size_t i = 0; i < 9; ++i) mx = std::max(mx, double(xv[r * 9 + i]));
    for (std::size_t i = 0; i < 9; ++i) z += std::exp(xv[r * 9 + i] - mx);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(yv[r * 9 + i], std::exp(xv[r * 9 + i] - mx) / z, 1e-6);
  }
}

TEST(Ops, SoftmaxOverLeadingAxis) {
  const Tensor x = Tensor::from_f32({2, 2}, {0.0f, 1.0f, 0.0f, 3.0f});
  const Tensor sm = ops::softmax(x, 0);
  auto y = sm.f32();
  EXPECT_FLOAT_EQ(y[0], 0.5f);
  EXPECT_FLOAT_EQ(y[2], 0.5f);
  EXPECT_NEAR(y[1], 1.0 / (1.0 + std::exp(2.0)), 1e-7);
  EXPECT_EQ(kind_of([&] { ops::softmax(x, 2); }), ErrorKind::kDimension);
}

TEST(Ops, GeluExactErf) {
  const Tensor x = random_tensor({64}, 12, 3.0f);
  const Tensor g = ops::gelu(x);
  auto xv = x.f32();
  auto yv = g.f32();
  for (std::size_t i = 0; i < 64; ++i) {
    const double ref = 0.5 * xv[i] * (1.0 + std::erf(xv[i] / std::sqrt(2.0)));
    EXPECT_NEAR(yv[i], ref, 1e-6);
  }
  EXPECT_EQ(ops::gelu(ops::cast(x, Dtype::kF16)).dtype(), Dtype::kF16);
}

TEST(Ops, CastRules) {
  const Tensor x = random_tensor({10}, 13);
  const Tensor h = ops::cast(x, Dtype::kF16);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(h.value_at(i), round_to_half(x.f32()[i]));
  EXPECT_TRUE(ops::cast(ops::cast(h, Dtype::kF32), Dtype::kF16).bitwise_equal(h));
  EXPECT_EQ(kind_of([&] { ops::cast(x, Dtype::kI8); }), ErrorKind::kUnsupportedCast);
  EXPECT_EQ(kind_of([] { ops::cast(Tensor({2}, Dtype::kI8), Dtype::kF32); }), ErrorKind::kUnsupportedCast);
}

TEST(Ops, AddMismatchIsDimensionError) {
  EXPECT_EQ(kind_of([] { ops::add(Tensor({2, 3}, Dtype::kF32), Tensor({3, 2}, Dtype::kF32)); }),
            ErrorKind::kDimension);
}

TEST(Ops, AttentionAgainstDoubleOracle) {
  const std::size_t B = 2, T = 5, H = 8, heads = 2, d = 4;
  const Tensor q = random_tensor({B, T, H}, 14), k = random_tensor({B, T, H}, 15), v = random_tensor({B, T, H}, 16);
  const Tensor out = ops::attention(q, k, v, heads);
  auto qv = q.f32(), kv = k.f32(), vv = v.f32(), ov = out.f32();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < T; ++i) {
        std::vector<double> s(T);
        double mx = -1e30, z = 0;
        for (std::size_t j = 0; j < T; ++j) {
          double dot = 0;
          for (std::size_t e = 0; e < d; ++e) dot += qv[(b * T + i) * H + h * d + e] * kv[(b * T + j) * H + h * d + e];
          s[j] = dot / 2.0;
          mx = std::max(mx, s[j]);
        }
        for (auto& x : s) z += (x = std::exp(x - mx));
        for (std::size_t e = 0; e < d; ++e) {
          double ref = 0;
          for (std::size_t j = 0; j < T; ++j) ref += s[j] / z * vv[(b * T + j) * H + h * d + e];
          EXPECT_NEAR(ov[(b * T + i) * H + h * d + e], ref, 1e-5);
        }
      }
  EXPECT_EQ(ops::attention(q, k, v, heads, Dtype::kF16).dtype(), Dtype::kF16);
  EXPECT_EQ(kind_of([&] { ops::attention(q, k, v, 3); }), ErrorKind::kDimension);
}

}  // namespace
}  // namespace vitslim
