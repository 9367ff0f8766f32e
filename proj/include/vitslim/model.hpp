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

#ifndef VITSLIM_MODEL_HPP_
#define VITSLIM_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vitslim/qlinear.hpp"
#include "vitslim/tensor.hpp"

namespace vitslim {

struct ModelConfig {
  std::size_t num_layers = 0;
  std::size_t hidden_size = 0;
  std::size_t mlp_size = 0;
  std::size_t num_heads = 0;
  std::size_t image_size = 0;
  std::size_t patch_size = 0;
  std::size_t num_channels = 3;
  std::size_t num_classes = 0;

  /// Throws a config error on zero sizes or indivisible hidden/heads and
  /// image/patch pairs.
  void validate() const;

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t tokens() const { return num_patches() + 1; }
  std::size_t patch_dim() const { return num_channels * patch_size * patch_size; }
  std::size_t head_dim() const { return hidden_size / num_heads; }

  /// "vit-huge" (32 x 1280, MLP 5120, 16 heads, 224/14, 1000 classes) or
  /// "vit-toy" (4 x 64, MLP 256, 4 heads, 32/4, 10 classes).
  static ModelConfig preset(std::string_view name);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Fully connected layer, y = x W^T + b, in one of three exclusive states:
/// F32 weights, F16 weights, or an INT8 QuantizedLinear (weight and bias
/// are then empty).
class Linear {
 public:
  Linear() = default;
  Linear(Tensor weight, Tensor bias);

  Tensor weight;  // [out, in]
  Tensor bias;    // [out]
  std::optional<QuantizedLinear> quantized;

  Dtype state() const;
  bool is_quantized() const { return quantized.has_value(); }
  std::size_t in_features() const;
  std::size_t out_features() const;

  /// F16 layers consume their input rounded to F16 and return F16 output;
  /// accumulation is F32 in every state.
  Tensor forward(const Tensor& x) const;

  std::size_t byte_size() const;
  std::size_t param_count() const;

  /// Precision-state error if the tensors disagree with the declared state.
  void check_state(std::string_view name) const;
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

struct EncoderLayer {
  LayerNormParams norm_before;
  Linear query;
  Linear key;
  Linear value;
  Linear attn_output;
  LayerNormParams norm_after;
  Linear intermediate;  // hidden -> mlp width
  Linear output;        // mlp width -> hidden

  /// Original index of every surviving intermediate channel, ascending.
  std::vector<std::size_t> channel_ids;

  std::size_t mlp_width() const { return intermediate.out_features(); }
};

namespace layer_names {
inline constexpr std::string_view kPatchEmbed = "patch_embed";
inline constexpr std::string_view kHead = "head";
std::string query(std::size_t layer);
std::string key(std::size_t layer);
std::string value(std::size_t layer);
std::string attn_output(std::size_t layer);
std::string intermediate(std::size_t layer);
std::string output(std::size_t layer);
}  // namespace layer_names

/// Shell-style glob ('*', '?', '[...]'); '*' also crosses dots.
bool glob_match(std::string_view pattern, std::string_view name);
bool matches_any(const std::vector<std::string>& patterns, std::string_view name);

struct LinearObservation {
  std::string_view name;
  const Tensor& input;
  /// Post-GELU for intermediate.dense layers, raw output otherwise.
  const Tensor& output;
};

/// Read-only taps on named linears during forward().
class ObserverSet {
 public:
  using Callback = std::function<void(const LinearObservation&)>;

  ObserverSet(std::vector<std::string> patterns, Callback callback);

  bool wants(std::string_view name) const { return matches_any(patterns_, name); }
  void notify(std::string_view name, const Tensor& input, const Tensor& output) const;

 private:
  std::vector<std::string> patterns_;
  Callback callback_;
};

struct VitModel {
  ModelConfig config;
  Linear patch_embed;
  Tensor cls_token;  // [hidden]
  Tensor pos_embed;  // [tokens, hidden]
  std::vector<EncoderLayer> layers;
  LayerNormParams final_norm;
  Linear head;

  /// All linear layer names in execution order.
  std::vector<std::string> linear_names() const;
  Linear& linear(std::string_view name);
  const Linear& linear(std::string_view name) const;

  void for_each_linear(const std::function<void(const std::string&, Linear&)>& fn);
  void for_each_linear(const std::function<void(const std::string&, const Linear&)>& fn) const;

  /// Throws a precision-state error if any tensor is in a dtype its op does
  /// not accept (layernorm and embeddings must be F32).
  void check_precision_state() const;
};

/// Normal(0, 0.02) weights from Rng(seed), zero biases, unit layernorm gain.
/// Draw order: patch_embed.weight, cls_token, pos_embed, then per layer
/// query, key, value, attention output, intermediate, output weights, then
/// head.weight; each tensor row-major.
VitModel init_model(const ModelConfig& config, std::uint64_t seed);

std::size_t count_params(const VitModel& model);

/// Parameters of an unpruned model with this config, without allocating it.
std::size_t count_params(const ModelConfig& config);

/// Parameter bytes at current dtypes, including quantization scale tensors.
std::size_t weight_bytes(const VitModel& model);

/// [B, C, H, W] -> [B, patches, C * p * p]; each patch flattened channel, row, column.
Tensor patchify(const ModelConfig& config, const Tensor& images);

/// Pre-LN ViT forward pass, F32 logits [B, classes].
Tensor forward(const VitModel& model, const Tensor& images, const ObserverSet* observers = nullptr);

struct FlopCount {
  std::uint64_t patch_embed = 0;
  std::vector<std::uint64_t> attention;  // per layer: q, k, v, scores, context, output
  std::vector<std::uint64_t> mlp;        // per layer: intermediate + output
  std::uint64_t head = 0;

  std::uint64_t total() const;
};

/// 2 * M * K * N per matrix product.
FlopCount count_flops(const VitModel& model, std::size_t batch);

bool bitwise_equal(const VitModel& a, const VitModel& b);

}  // namespace vitslim

#endif  // VITSLIM_MODEL_HPP_
