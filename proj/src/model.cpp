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

#include "vitslim/model.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <numeric>
#include <utility>

#include "vitslim/error.hpp"
#include "vitslim/ops.hpp"
#include "vitslim/rng.hpp"

namespace vitslim {

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::kConfig, "invalid model config: " + what);
  };
  require(num_layers > 0, "num_layers must be positive");
  require(hidden_size > 0, "hidden_size must be positive");
  require(mlp_size > 0, "mlp_size must be positive");
  require(num_heads > 0, "num_heads must be positive");
  require(image_size > 0 && patch_size > 0, "image and patch size must be positive");
  require(num_channels > 0, "num_channels must be positive");
  require(num_classes > 0, "num_classes must be positive");
  require(hidden_size % num_heads == 0, "hidden_size must be divisible by num_heads");
  require(image_size % patch_size == 0, "image_size must be divisible by patch_size");
}

ModelConfig ModelConfig::preset(std::string_view name) {
  if (name == "vit-huge") return {32, 1280, 5120, 16, 224, 14, 3, 1000};
  if (name == "vit-toy") return {4, 64, 256, 4, 32, 4, 3, 10};
  fail(ErrorKind::kConfig, "unknown model preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

Linear::Linear(Tensor w, Tensor b) : weight(std::move(w)), bias(std::move(b)) {}

Dtype Linear::state() const { return quantized ? Dtype::kI8 : weight.dtype(); }

std::size_t Linear::in_features() const {
  return quantized ? quantized->in_features() : weight.dim(1);
}

std::size_t Linear::out_features() const {
  return quantized ? quantized->out_features() : weight.dim(0);
}

Tensor Linear::forward(const Tensor& x) const {
  if (quantized) return qlinear_forward(*quantized, x);
  if (weight.dtype() == Dtype::kF16) {
    const Tensor y = ops::linear(ops::cast(x, Dtype::kF16), weight, bias);
    return ops::cast(y, Dtype::kF16);
  }
  return ops::linear(x, weight, bias);
}

std::size_t Linear::byte_size() const {
  return quantized ? quantized->byte_size() : weight.byte_size() + bias.byte_size();
}

std::size_t Linear::param_count() const {
  if (quantized) return quantized->q_weight.numel() + quantized->bias.numel();
  return weight.numel() + bias.numel();
}

void Linear::check_state(std::string_view name) const {
  const std::string n(name);
  if (quantized) {
    if (!weight.empty() || !bias.empty()) {
      fail(ErrorKind::kPrecisionState, n + " holds both dense and quantized weights");
    }
    if (quantized->q_weight.dtype() != Dtype::kI8 || quantized->bias.dtype() != Dtype::kF32) {
      fail(ErrorKind::kPrecisionState, n + " quantized payload has wrong dtypes");
    }
    return;
  }
  if (weight.empty() || bias.empty()) fail(ErrorKind::kPrecisionState, n + " has no weights");
  if (weight.dtype() == Dtype::kI8) {
    fail(ErrorKind::kPrecisionState, n + " has raw i8 weights without quantization parameters");
  }
  if (weight.dtype() != bias.dtype()) {
    fail(ErrorKind::kPrecisionState, n + " weight is " + dtype_name(weight.dtype()) + " but bias is " +
                                         dtype_name(bias.dtype()));
  }
}

// ---------------------------------------------------------------------------

namespace layer_names {
namespace {
std::string prefix(std::size_t layer) { return "encoder.layer." + std::to_string(layer); }
}  // namespace
std::string query(std::size_t layer) { return prefix(layer) + ".attention.query"; }
std::string key(std::size_t layer) { return prefix(layer) + ".attention.key"; }
std::string value(std::size_t layer) { return prefix(layer) + ".attention.value"; }
std::string attn_output(std::size_t layer) { return prefix(layer) + ".attention.output"; }
std::string intermediate(std::size_t layer) { return prefix(layer) + ".intermediate.dense"; }
std::string output(std::size_t layer) { return prefix(layer) + ".output.dense"; }
}  // namespace layer_names

bool glob_match(std::string_view pattern, std::string_view name) {
  return ::fnmatch(std::string(pattern).c_str(), std::string(name).c_str(), 0) == 0;
}

bool matches_any(const std::vector<std::string>& patterns, std::string_view name) {
  for (const auto& p : patterns) {
    if (glob_match(p, name)) return true;
  }
  return false;
}

ObserverSet::ObserverSet(std::vector<std::string> patterns, Callback callback)
    : patterns_(std::move(patterns)), callback_(std::move(callback)) {}

void ObserverSet::notify(std::string_view name, const Tensor& input, const Tensor& output) const {
  if (callback_ && wants(name)) callback_(LinearObservation{name, input, output});
}

// ---------------------------------------------------------------------------

std::vector<std::string> VitModel::linear_names() const {
  std::vector<std::string> names{std::string(layer_names::kPatchEmbed)};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    names.push_back(layer_names::query(l));
    names.push_back(layer_names::key(l));
    names.push_back(layer_names::value(l));
    names.push_back(layer_names::attn_output(l));
    names.push_back(layer_names::intermediate(l));
    names.push_back(layer_names::output(l));
  }
  names.emplace_back(layer_names::kHead);
  return names;
}

const Linear& VitModel::linear(std::string_view name) const {
  if (name == layer_names::kPatchEmbed) return patch_embed;
  if (name == layer_names::kHead) return head;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const EncoderLayer& layer = layers[l];
    if (name == layer_names::query(l)) return layer.query;
    if (name == layer_names::key(l)) return layer.key;
    if (name == layer_names::value(l)) return layer.value;
    if (name == layer_names::attn_output(l)) return layer.attn_output;
    if (name == layer_names::intermediate(l)) return layer.intermediate;
    if (name == layer_names::output(l)) return layer.output;
  }
  fail(ErrorKind::kLookup, "no linear layer named '" + std::string(name) + "'");
}

Linear& VitModel::linear(std::string_view name) {
  return const_cast<Linear&>(std::as_const(*this).linear(name));
}

void VitModel::for_each_linear(const std::function<void(const std::string&, Linear&)>& fn) {
  for (const auto& name : linear_names()) fn(name, linear(name));
}

void VitModel::for_each_linear(
    const std::function<void(const std::string&, const Linear&)>& fn) const {
  for (const auto& name : linear_names()) fn(name, linear(name));
}

void VitModel::check_precision_state() const {
  auto f32_only = [](const Tensor& t, const std::string& what) {
    if (t.dtype() != Dtype::kF32) {
      fail(ErrorKind::kPrecisionState, what + " must be f32, found " + dtype_name(t.dtype()));
    }
  };
  f32_only(cls_token, "cls_token");
  f32_only(pos_embed, "pos_embed");
  f32_only(final_norm.gamma, "layernorm.weight");
  f32_only(final_norm.beta, "layernorm.bias");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "encoder.layer." + std::to_string(l);
    f32_only(layers[l].norm_before.gamma, p + ".layernorm_before.weight");
    f32_only(layers[l].norm_before.beta, p + ".layernorm_before.bias");
    f32_only(layers[l].norm_after.gamma, p + ".layernorm_after.weight");
    f32_only(layers[l].norm_after.beta, p + ".layernorm_after.bias");
  }
  for_each_linear([](const std::string& name, const Linear& lin) { lin.check_state(name); });
}

// ---------------------------------------------------------------------------

namespace {

Tensor normal_tensor(Rng& rng, Shape shape, double stddev) {
  std::vector<float> values(shape_numel(shape));
  for (float& v : values) v = static_cast<float>(stddev * rng.normal());
  return Tensor::from_f32(std::move(shape), std::move(values));
}

Linear init_linear(Rng& rng, std::size_t in, std::size_t out) {
  return Linear(normal_tensor(rng, {out, in}, 0.02), Tensor({out}, Dtype::kF32));
}

LayerNormParams init_norm(std::size_t hidden) {
  return {Tensor::from_f32({hidden}, std::vector<float>(hidden, 1.0f)), Tensor({hidden}, Dtype::kF32)};
}

}  // namespace

VitModel init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t h = config.hidden_size;
  VitModel m;
  m.config = config;
  m.patch_embed = init_linear(rng, config.patch_dim(), h);
  m.cls_token = normal_tensor(rng, {h}, 0.02);
  m.pos_embed = normal_tensor(rng, {config.tokens(), h}, 0.02);
  m.layers.resize(config.num_layers);
  for (auto& layer : m.layers) {
    layer.norm_before = init_norm(h);
    layer.query = init_linear(rng, h, h);
    layer.key = init_linear(rng, h, h);
    layer.value = init_linear(rng, h, h);
    layer.attn_output = init_linear(rng, h, h);
    layer.norm_after = init_norm(h);
    layer.intermediate = init_linear(rng, h, config.mlp_size);
    layer.output = init_linear(rng, config.mlp_size, h);
    layer.channel_ids.resize(config.mlp_size);
    std::iota(layer.channel_ids.begin(), layer.channel_ids.end(), std::size_t{0});
  }
  m.final_norm = init_norm(h);
  m.head = init_linear(rng, h, config.num_classes);
  return m;
}

std::size_t count_params(const VitModel& m) {
  std::size_t n = m.cls_token.numel() + m.pos_embed.numel();
  n += m.final_norm.gamma.numel() + m.final_norm.beta.numel();
  for (const auto& layer : m.layers) {
    n += layer.norm_before.gamma.numel() + layer.norm_before.beta.numel();
    n += layer.norm_after.gamma.numel() + layer.norm_after.beta.numel();
  }
  m.for_each_linear([&](const std::string&, const Linear& lin) { n += lin.param_count(); });
  return n;
}

std::size_t count_params(const ModelConfig& c) {
  c.validate();
  const std::size_t h = c.hidden_size;
  auto linear = [](std::size_t in, std::size_t out) { return in * out + out; };
  const std::size_t block = 4 * h + 4 * linear(h, h) + linear(h, c.mlp_size) + linear(c.mlp_size, h);
  return linear(c.patch_dim(), h) + h + c.tokens() * h + c.num_layers * block + 2 * h + linear(h, c.num_classes);
}

std::size_t weight_bytes(const VitModel& m) {
  std::size_t n = m.cls_token.byte_size() + m.pos_embed.byte_size();
  n += m.final_norm.gamma.byte_size() + m.final_norm.beta.byte_size();
  for (const auto& layer : m.layers) {
    n += layer.norm_before.gamma.byte_size() + layer.norm_before.beta.byte_size();
    n += layer.norm_after.gamma.byte_size() + layer.norm_after.beta.byte_size();
  }
  m.for_each_linear([&](const std::string&, const Linear& lin) { n += lin.byte_size(); });
  return n;
}

Tensor patchify(const ModelConfig& config, const Tensor& images) {
  const std::size_t c = config.num_channels, s = config.image_size, p = config.patch_size;
  if (images.rank() != 4 || images.dim(1) != c || images.dim(2) != s || images.dim(3) != s) {
    fail(ErrorKind::kDimension, "images " + shape_string(images.shape()) + " do not match [B," +
                                    std::to_string(c) + "," + std::to_string(s) + "," +
                                    std::to_string(s) + "]");
  }
  const Tensor src_t = as_f32(images);
  auto src = src_t.f32();
  const std::size_t batch = images.dim(0), grid = config.grid(), pd = config.patch_dim();
  std::vector<float> out(batch * grid * grid * pd);
  std::size_t idx = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t gy = 0; gy < grid; ++gy) {
      for (std::size_t gx = 0; gx < grid; ++gx) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t y = 0; y < p; ++y) {
            const float* row = src.data() + ((b * c + ch) * s + gy * p + y) * s + gx * p;
            for (std::size_t x = 0; x < p; ++x) out[idx++] = row[x];
          }
        }
      }
    }
  }
  return Tensor::from_f32({batch, grid * grid, pd}, std::move(out));
}

namespace {

Tensor layernorm(const Tensor& x, const LayerNormParams& ln) {
  return ops::layernorm(x, ln.gamma, ln.beta, 1e-6f);
}

Tensor run_linear(const Linear& lin, std::string_view name, const Tensor& x,
                  const ObserverSet* observers) {
  Tensor y = lin.forward(x);
  if (observers) observers->notify(name, x, y);
  return y;
}

}  // namespace

Tensor forward(const VitModel& m, const Tensor& images, const ObserverSet* observers) {
  const ModelConfig& cfg = m.config;
  m.check_precision_state();
  const Tensor patches = patchify(cfg, images);
  const std::size_t batch = patches.dim(0), tokens = cfg.tokens(), hidden = cfg.hidden_size;

  const Tensor emb = as_f32(run_linear(m.patch_embed, layer_names::kPatchEmbed, patches, observers));
  if (m.pos_embed.shape() != Shape{tokens, hidden} || m.cls_token.shape() != Shape{hidden}) {
    fail(ErrorKind::kDimension, "embedding tensors do not match the model config");
  }

  std::vector<float> xs(batch * tokens * hidden);
  {
    auto e = emb.f32();
    auto pos = m.pos_embed.f32();
    auto cls = m.cls_token.f32();
    for (std::size_t b = 0; b < batch; ++b) {
      float* dst = xs.data() + b * tokens * hidden;
      for (std::size_t i = 0; i < hidden; ++i) dst[i] = cls[i] + pos[i];
      for (std::size_t t = 1; t < tokens; ++t) {
        const float* src = e.data() + (b * (tokens - 1) + (t - 1)) * hidden;
        for (std::size_t i = 0; i < hidden; ++i) dst[t * hidden + i] = src[i] + pos[t * hidden + i];
      }
    }
  }
  Tensor x = Tensor::from_f32({batch, tokens, hidden}, std::move(xs));

  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const EncoderLayer& layer = m.layers[l];
    const Tensor h = layernorm(x, layer.norm_before);
    const Tensor q = run_linear(layer.query, layer_names::query(l), h, observers);
    const Tensor k = run_linear(layer.key, layer_names::key(l), h, observers);
    const Tensor v = run_linear(layer.value, layer_names::value(l), h, observers);
    const bool half = q.dtype() == Dtype::kF16 && k.dtype() == Dtype::kF16 && v.dtype() == Dtype::kF16;
    const Tensor ctx = ops::attention(q, k, v, cfg.num_heads, half ? Dtype::kF16 : Dtype::kF32);
    x = ops::add(x, run_linear(layer.attn_output, layer_names::attn_output(l), ctx, observers));

    const Tensor h2 = layernorm(x, layer.norm_after);
    const Tensor act = ops::gelu(layer.intermediate.forward(h2));
    if (observers) observers->notify(layer_names::intermediate(l), h2, act);
    x = ops::add(x, run_linear(layer.output, layer_names::output(l), act, observers));
  }

  const Tensor normed = layernorm(x, m.final_norm);
  auto nv = normed.f32();
  std::vector<float> cls(batch * hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(nv.data() + b * tokens * hidden, hidden, cls.data() + b * hidden);
  }
  const Tensor cls_t = Tensor::from_f32({batch, hidden}, std::move(cls));
  return as_f32(run_linear(m.head, layer_names::kHead, cls_t, observers));
}

std::uint64_t FlopCount::total() const {
  std::uint64_t t = patch_embed + head;
  for (auto v : attention) t += v;
  for (auto v : mlp) t += v;
  return t;
}

FlopCount count_flops(const VitModel& m, std::size_t batch) {
  const ModelConfig& c = m.config;
  const std::uint64_t b = batch, t = c.tokens(), h = c.hidden_size;
  auto mm = [](std::uint64_t rows, std::uint64_t inner, std::uint64_t cols) {
    return 2 * rows * inner * cols;
  };
  FlopCount f;
  f.patch_embed = mm(b * c.num_patches(), c.patch_dim(), h);
  for (const auto& layer : m.layers) {
    // q, k, v, output projections plus scores (q k^T) and context (p v)
    // summed over heads, which together span the full hidden width.
    f.attention.push_back(4 * mm(b * t, h, h) + 2 * mm(b * t, h, t));
    const std::uint64_t w = layer.mlp_width();
    f.mlp.push_back(mm(b * t, h, w) + mm(b * t, w, h));
  }
  f.head = mm(b, h, c.num_classes);
  return f;
}

bool bitwise_equal(const VitModel& a, const VitModel& b) {
  if (!(a.config == b.config) || a.layers.size() != b.layers.size()) return false;
  auto same_linear = [](const Linear& x, const Linear& y) {
    if (x.quantized.has_value() != y.quantized.has_value()) return false;
    if (x.quantized) {
      return x.quantized->q_weight.bitwise_equal(y.quantized->q_weight) &&
             x.quantized->bias.bitwise_equal(y.quantized->bias) && x.quantized->params == y.quantized->params;
    }
    return x.weight.bitwise_equal(y.weight) && x.bias.bitwise_equal(y.bias);
  };
  auto same_norm = [](const LayerNormParams& x, const LayerNormParams& y) {
    return x.gamma.bitwise_equal(y.gamma) && x.beta.bitwise_equal(y.beta);
  };
  if (!a.cls_token.bitwise_equal(b.cls_token) || !a.pos_embed.bitwise_equal(b.pos_embed)) return false;
  if (!same_norm(a.final_norm, b.final_norm)) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& x = a.layers[l];
    const auto& y = b.layers[l];
    if (x.channel_ids != y.channel_ids) return false;
    if (!same_norm(x.norm_before, y.norm_before) || !same_norm(x.norm_after, y.norm_after)) return false;
  }
  for (const auto& name : a.linear_names()) {
    if (!same_linear(a.linear(name), b.linear(name))) return false;
  }
  return true;
}

}  // namespace vitslim
