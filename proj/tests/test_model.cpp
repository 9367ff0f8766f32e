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
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vitslim/error.hpp"
#include "vitslim/model.hpp"
#include "vitslim/precision.hpp"

namespace vitslim {
namespace {

using testing::closed_form_params;
using testing::random_calibration;
using testing::reference_forward;

TEST(ModelConfig, PresetsMatchClosedForm) {
  for (const char* name : {"vit-toy", "vit-huge"}) {
    const ModelConfig c = ModelConfig::preset(name);
    EXPECT_NO_THROW(c.validate());
    if (std::string(name) == "vit-toy") {
      EXPECT_EQ(count_params(init_model(c, 0)), closed_form_params(c));
    }
  }
  EXPECT_EQ(closed_form_params(ModelConfig::preset("vit-huge")), 632045800u);
  EXPECT_EQ(count_params(ModelConfig::preset("vit-huge")), 632045800u);
  EXPECT_EQ(count_params(ModelConfig::preset("vit-toy")), count_params(init_model(ModelConfig::preset("vit-toy"), 0)));
  EXPECT_EQ(closed_form_params(ModelConfig::preset("vit-toy")), 208074u);
  // F32 weights of the large preset land near the reported ~2528 MB.
  const double huge_mb = 4.0 * double(count_params(ModelConfig::preset("vit-huge"))) / 1e6;
  EXPECT_NEAR(huge_mb, 2528.0, 25.0);
  EXPECT_EQ(weight_bytes(init_model(ModelConfig::preset("vit-toy"), 0)), 4 * closed_form_params(ModelConfig::preset("vit-toy")));
}

TEST(ModelConfig, RejectsInvalidShapes) {
  ModelConfig c = ModelConfig::preset("vit-toy");
  c.num_heads = 3;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  c = ModelConfig::preset("vit-toy");
  c.patch_size = 5;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(ModelConfig::preset("vit-giant"), Error);
}

TEST(Model, ToyWeightBytes) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 1);
  EXPECT_EQ(weight_bytes(m), 208074u * 4);
}

TEST(Model, InitIsSeeded) {
  const ModelConfig c = ModelConfig::preset("vit-toy");
  EXPECT_TRUE(bitwise_equal(init_model(c, 9), init_model(c, 9)));
  EXPECT_FALSE(bitwise_equal(init_model(c, 9), init_model(c, 10)));
}

TEST(Model, InitStatistics) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 2);
  auto w = m.layers[0].intermediate.weight.f32();
  double sum = 0, sq = 0;
  for (float v : w) {
    sum += v;
    sq += double(v) * v;
  }
  const double n = static_cast<double>(w.size());
  EXPECT_NEAR(sum / n, 0.0, 0.001);
  EXPECT_NEAR(std::sqrt(sq / n), 0.02, 0.001);
  for (float v : m.layers[0].intermediate.bias.f32()) EXPECT_EQ(v, 0.0f);
  for (float v : m.final_norm.gamma.f32()) EXPECT_EQ(v, 1.0f);
}

TEST(Model, LinearNamesInExecutionOrder) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 0);
  const auto names = m.linear_names();
  ASSERT_EQ(names.size(), 1u + 6 * 4 + 1);
  EXPECT_EQ(names.front(), "patch_embed");
  EXPECT_EQ(names[1], "encoder.layer.0.attention.query");
  EXPECT_EQ(names[4], "encoder.layer.0.attention.output");
  EXPECT_EQ(names[5], "encoder.layer.0.intermediate.dense");
  EXPECT_EQ(names[6], "encoder.layer.0.output.dense");
  EXPECT_EQ(names.back(), "head");
  try {
    (void)m.linear("encoder.layer.9.output.dense");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLookup);
  }
}

TEST(Model, GlobMatching) {
  EXPECT_TRUE(glob_match("*", "encoder.layer.0.attention.query"));
  EXPECT_TRUE(glob_match("encoder.layer.*.output.dense", "encoder.layer.3.output.dense"));
  EXPECT_FALSE(glob_match("encoder.layer.*.output.dense", "encoder.layer.3.attention.output"));
  EXPECT_TRUE(glob_match("encoder.layer.?.intermediate.dense", "encoder.layer.2.intermediate.dense"));
  EXPECT_FALSE(glob_match("head", "patch_embed"));
  EXPECT_TRUE(matches_any({"head", "patch_*"}, "patch_embed"));
}

TEST(Model, PatchifyOrder) {
  ModelConfig c{1, 4, 8, 1, 4, 2, 2, 3};
  std::vector<float> px(2 * 4 * 4);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(i);
  const Tensor p = patchify(c, Tensor::from_f32({1, 2, 4, 4}, px));
  ASSERT_EQ(p.shape(), (Shape{1, 4, 8}));
  // Patch 1 is grid row 0, column 1: channel 0 rows 0-1 cols 2-3, then channel 1.
  const std::vector<float> expected = {2, 3, 6, 7, 18, 19, 22, 23};
  auto v = p.f32();
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(v[8 + i], expected[i]);
}

TEST(Model, ForwardMatchesReference) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 3);
  const CalibrationSet data = random_calibration(m.config, 4, 3);
  const Tensor logits = forward(m, data.images);
  const auto ref = reference_forward(m, data.images);
  ASSERT_EQ(logits.shape(), (Shape{4, 10}));
  auto v = logits.f32();
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(v[i], ref[i], 1e-4);
}

TEST(Model, ForwardIsDeterministic) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 4);
  const CalibrationSet data = random_calibration(m.config, 3, 4);
  EXPECT_TRUE(forward(m, data.images).bitwise_equal(forward(m, data.images)));
}

TEST(Model, ForwardRejectsWrongImageSize) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 4);
  try {
    forward(m, Tensor({1, 3, 16, 16}, Dtype::kF32));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Model, ObserversSeeMlpOutputsPostGelu) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 5);
  const CalibrationSet data = random_calibration(m.config, 2, 5);
  std::set<std::string> seen;
  bool checked = false;
  ObserverSet obs({"encoder.layer.*.intermediate.dense", "encoder.layer.*.output.dense"},
                  [&](const LinearObservation& o) {
                    seen.insert(std::string(o.name));
                    if (o.name == "encoder.layer.0.intermediate.dense") {
                      const Tensor pre = m.layers[0].intermediate.forward(o.input);
                      auto a = pre.f32(), b = o.output.f32();
                      for (std::size_t i = 0; i < a.size(); ++i) {
                        const float g = 0.5f * a[i] * (1.0f + std::erf(a[i] * 0.70710678118654752f));
                        ASSERT_NEAR(b[i], g, 1e-6);
                      }
                      checked = true;
                    }
                  });
  forward(m, data.images, &obs);
  EXPECT_TRUE(checked);
  EXPECT_EQ(seen.size(), 8u);
}

TEST(Model, FlopsClosedForm) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 0);
  const std::uint64_t B = 32, T = 65, H = 64, W = 256, P = 48;
  const FlopCount f = count_flops(m, B);
  EXPECT_EQ(f.patch_embed, 2 * B * (T - 1) * P * H);
  EXPECT_EQ(f.attention[0], 4 * 2 * B * T * H * H + 2 * 2 * B * T * T * H);
  EXPECT_EQ(f.mlp[0], 2 * 2 * B * T * H * W);
  EXPECT_EQ(f.head, 2 * B * H * 10);
  EXPECT_EQ(f.total(), f.patch_embed + f.head + 4 * (f.attention[0] + f.mlp[0]));
}

TEST(Model, PrecisionStateIsChecked) {
  VitModel m = init_model(ModelConfig::preset("vit-toy"), 0);
  m.layers[1].norm_after.gamma = Tensor({64}, Dtype::kF16);
  try {
    m.check_precision_state();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecisionState);
  }
}

TEST(Model, HalfForwardStaysClose) {
  const VitModel m = init_model(ModelConfig::preset("vit-toy"), 6);
  const CalibrationSet data = random_calibration(m.config, 4, 6);
  const Tensor a = forward(m, data.images), b = forward(to_fp16(m), data.images);
  EXPECT_EQ(b.dtype(), Dtype::kF32);
  auto av = a.f32(), bv = b.f32();
  for (std::size_t i = 0; i < av.size(); ++i) EXPECT_NEAR(av[i], bv[i], 5e-3);
}

}  // namespace
}  // namespace vitslim
