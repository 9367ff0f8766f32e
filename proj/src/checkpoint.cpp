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

#include "vitslim/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include <json.hpp>

#include "vitslim/error.hpp"

namespace vitslim {
namespace {

using nlohmann::json;
using TensorMap = std::map<std::string, Tensor>;

constexpr char kMagic[4] = {'E', 'F', 'L', 'X'};
constexpr std::size_t kPreamble = 16;

std::size_t align_up(std::size_t n) { return (n + kPayloadAlignment - 1) / kPayloadAlignment * kPayloadAlignment; }

Tensor vector_tensor(const std::vector<float>& v) { return Tensor::from_f32({v.size()}, v); }
Tensor scalar_tensor(float v) { return Tensor::from_f32({1}, {v}); }

void put_linear(TensorMap& out, const std::string& name, const Linear& lin) {
  if (lin.quantized) {
    const QuantizedLinear& q = *lin.quantized;
    out[name + ".weight"] = q.q_weight;
    out[name + ".bias"] = q.bias;
    out[name + ".weight_scales"] = vector_tensor(q.params.weight_scales);
    out[name + ".eq_scales"] = vector_tensor(q.params.eq_scales);
    out[name + ".act_scale"] = scalar_tensor(q.params.act_scale);
    out[name + ".alpha"] = scalar_tensor(q.params.alpha);
    return;
  }
  out[name + ".weight"] = lin.weight;
  out[name + ".bias"] = lin.bias;
}

void put_norm(TensorMap& out, const std::string& name, const LayerNormParams& ln) {
  out[name + ".weight"] = ln.gamma;
  out[name + ".bias"] = ln.beta;
}

std::string block_prefix(std::size_t l) { return "encoder.layer." + std::to_string(l); }

json config_to_json(const ModelConfig& c) {
  return {{"num_layers", c.num_layers}, {"hidden_size", c.hidden_size}, {"mlp_size", c.mlp_size},
          {"num_heads", c.num_heads},   {"image_size", c.image_size},   {"patch_size", c.patch_size},
          {"num_channels", c.num_channels}, {"num_classes", c.num_classes}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.mlp_size = j.at("mlp_size").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.image_size = j.at("image_size").get<std::size_t>();
  c.patch_size = j.at("patch_size").get<std::size_t>();
  c.num_channels = j.at("num_channels").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  return c;
}

// Pulls tensors out of the decoded map, insisting every one is used exactly once.
class TensorSource {
 public:
  explicit TensorSource(TensorMap tensors) : tensors_(std::move(tensors)) {}

  Tensor take(const std::string& name, const Shape& shape) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) fail(ErrorKind::kFormat, "checkpoint is missing tensor '" + name + "'");
    Tensor t = std::move(it->second);
    tensors_.erase(it);
    if (t.shape() != shape) {
      fail(ErrorKind::kFormat, "tensor '" + name + "' has shape " + shape_string(t.shape()) + ", expected " +
                                   shape_string(shape));
    }
    return t;
  }

  Tensor take_f32(const std::string& name, const Shape& shape) {
    Tensor t = take(name, shape);
    if (t.dtype() != Dtype::kF32) fail(ErrorKind::kFormat, "tensor '" + name + "' must be f32");
    return t;
  }

  Dtype peek_dtype(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) fail(ErrorKind::kFormat, "checkpoint is missing tensor '" + name + "'");
    return it->second.dtype();
  }

  Linear linear(const std::string& name, std::size_t out, std::size_t in, bool dynamic) {
    Linear lin;
    if (peek_dtype(name + ".weight") == Dtype::kI8) {
      QuantizedLinear q;
      q.q_weight = take(name + ".weight", {out, in});
      q.bias = take_f32(name + ".bias", {out});
      const Tensor ws = take_f32(name + ".weight_scales", {out});
      const Tensor eq = take_f32(name + ".eq_scales", {in});
      q.params.weight_scales.assign(ws.f32().begin(), ws.f32().end());
      q.params.eq_scales.assign(eq.f32().begin(), eq.f32().end());
      q.params.act_scale = take_f32(name + ".act_scale", {1}).value_at(0);
      q.params.alpha = take_f32(name + ".alpha", {1}).value_at(0);
      q.params.dynamic_activation = dynamic;
      lin.quantized = std::move(q);
      return lin;
    }
    lin.weight = take(name + ".weight", {out, in});
    lin.bias = take(name + ".bias", {out});
    return lin;
  }

  LayerNormParams norm(const std::string& name, std::size_t hidden) {
    return {take(name + ".weight", {hidden}), take(name + ".bias", {hidden})};
  }

  void expect_consumed() const {
    if (!tensors_.empty()) fail(ErrorKind::kFormat, "unexpected tensor '" + tensors_.begin()->first + "'");
  }

 private:
  TensorMap tensors_;
};

}  // namespace

std::vector<std::byte> serialize_checkpoint(const VitModel& model) {
  TensorMap tensors;
  put_linear(tensors, std::string(layer_names::kPatchEmbed), model.patch_embed);
  tensors["cls_token"] = model.cls_token;
  tensors["pos_embed"] = model.pos_embed;
  json channel_ids = json::object();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const EncoderLayer& layer = model.layers[l];
    const std::string p = block_prefix(l);
    put_norm(tensors, p + ".layernorm_before", layer.norm_before);
    put_linear(tensors, layer_names::query(l), layer.query);
    put_linear(tensors, layer_names::key(l), layer.key);
    put_linear(tensors, layer_names::value(l), layer.value);
    put_linear(tensors, layer_names::attn_output(l), layer.attn_output);
    put_norm(tensors, p + ".layernorm_after", layer.norm_after);
    put_linear(tensors, layer_names::intermediate(l), layer.intermediate);
    put_linear(tensors, layer_names::output(l), layer.output);
    channel_ids[layer_names::intermediate(l)] = layer.channel_ids;
  }
  put_norm(tensors, "layernorm", model.final_norm);
  put_linear(tensors, std::string(layer_names::kHead), model.head);

  json dynamic = json::array();
  model.for_each_linear([&](const std::string& name, const Linear& lin) {
    if (lin.quantized && lin.quantized->params.dynamic_activation) dynamic.push_back(name);
  });

  json header = json::object();
  header["__metadata__"] = {{"config", config_to_json(model.config)},
                            {"channel_ids", channel_ids},
                            {"dynamic_activation", dynamic}};
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    header[name] = {{"dtype", dtype_name(t.dtype())}, {"shape", t.shape()}, {"offset", offset}};
    offset = align_up(offset + t.byte_size());
  }
  const std::string text = header.dump();
  const std::uint64_t header_len = text.size();
  const std::size_t payload_start = align_up(kPreamble + text.size());

  std::vector<std::byte> out(payload_start + offset, std::byte{0});
  std::memcpy(out.data(), kMagic, 4);
  std::memcpy(out.data() + 4, &kCheckpointVersion, 4);
  std::memcpy(out.data() + 8, &header_len, 8);
  std::memcpy(out.data() + kPreamble, text.data(), text.size());
  for (const auto& [name, t] : tensors) {
    const auto bytes = t.to_bytes();
    const std::size_t at = payload_start + header[name]["offset"].get<std::size_t>();
    std::copy(bytes.begin(), bytes.end(), out.begin() + static_cast<std::ptrdiff_t>(at));
  }
  // Trailing padding after the last tensor is not needed.
  if (!tensors.empty()) {
    const auto& [name, t] = *tensors.rbegin();
    out.resize(payload_start + header[name]["offset"].get<std::size_t>() + t.byte_size());
  }
  return out;
}

VitModel deserialize_checkpoint(std::span<const std::byte> bytes) {
  if (bytes.size() < kPreamble) fail(ErrorKind::kFormat, "checkpoint shorter than its preamble");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorKind::kFormat, "bad checkpoint magic");
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&header_len, bytes.data() + 8, 8);
  if (version != kCheckpointVersion) {
    fail(ErrorKind::kFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  if (header_len > bytes.size() - kPreamble) fail(ErrorKind::kFormat, "header runs past end of file");
  const std::size_t payload_start = align_up(kPreamble + header_len);

  json header;
  try {
    const char* begin = reinterpret_cast<const char*>(bytes.data() + kPreamble);
    header = json::parse(begin, begin + header_len);
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("__metadata__")) {
    fail(ErrorKind::kFormat, "checkpoint header lacks __metadata__");
  }

  try {
    TensorMap tensors;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& [name, entry] : header.items()) {
      if (name == "__metadata__") continue;
      const Dtype dtype = parse_dtype(entry.at("dtype").get<std::string>());
      const Shape shape = entry.at("shape").get<Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      if (shape.empty() || std::find(shape.begin(), shape.end(), 0) != shape.end()) {
        fail(ErrorKind::kFormat, "tensor '" + name + "' has an empty shape");
      }
      if (offset % kPayloadAlignment != 0) {
        fail(ErrorKind::kFormat, "tensor '" + name + "' offset " + std::to_string(offset) + " is not 64-byte aligned");
      }
      const std::size_t size = shape_numel(shape) * bytes_per_element(dtype);
      if (offset > bytes.size() || payload_start + offset > bytes.size() ||
          size > bytes.size() - payload_start - offset) {
        fail(ErrorKind::kFormat, "tensor '" + name + "' extends past end of file");
      }
      spans.emplace_back(offset, offset + size);
      tensors[name] = Tensor::from_bytes(shape, dtype, bytes.subspan(payload_start + offset, size));
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first < spans[i - 1].second) fail(ErrorKind::kFormat, "tensor payloads overlap");
    }

    const json& meta = header.at("__metadata__");
    ModelConfig config = config_from_json(meta.at("config"));
    try {
      config.validate();
    } catch (const Error& e) {
      fail(ErrorKind::kFormat, e.what());
    }
    std::set<std::string> dynamic;
    for (const auto& n : meta.at("dynamic_activation")) dynamic.insert(n.get<std::string>());

    const std::size_t h = config.hidden_size;
    TensorSource src(std::move(tensors));
    VitModel m;
    m.config = config;
    const std::string pe(layer_names::kPatchEmbed);
    m.patch_embed = src.linear(pe, h, config.patch_dim(), dynamic.count(pe) > 0);
    m.cls_token = src.take("cls_token", {h});
    m.pos_embed = src.take("pos_embed", {config.tokens(), h});
    m.layers.resize(config.num_layers);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
      EncoderLayer& layer = m.layers[l];
      const std::string p = block_prefix(l);
      auto ids = meta.at("channel_ids").at(layer_names::intermediate(l)).get<std::vector<std::size_t>>();
      if (ids.empty() || !std::is_sorted(ids.begin(), ids.end()) ||
          std::adjacent_find(ids.begin(), ids.end()) != ids.end() || ids.back() >= config.mlp_size) {
        fail(ErrorKind::kFormat, "invalid channel ids for " + layer_names::intermediate(l));
      }
      const std::size_t w = ids.size();
      auto lin = [&](const std::string& name, std::size_t out, std::size_t in) {
        return src.linear(name, out, in, dynamic.count(name) > 0);
      };
      layer.norm_before = src.norm(p + ".layernorm_before", h);
      layer.query = lin(layer_names::query(l), h, h);
      layer.key = lin(layer_names::key(l), h, h);
      layer.value = lin(layer_names::value(l), h, h);
      layer.attn_output = lin(layer_names::attn_output(l), h, h);
      layer.norm_after = src.norm(p + ".layernorm_after", h);
      layer.intermediate = lin(layer_names::intermediate(l), w, h);
      layer.output = lin(layer_names::output(l), h, w);
      layer.channel_ids = std::move(ids);
    }
    m.final_norm = src.norm("layernorm", h);
    const std::string hd(layer_names::kHead);
    m.head = src.linear(hd, config.num_classes, h, dynamic.count(hd) > 0);
    src.expect_consumed();
    try {
      m.check_precision_state();
    } catch (const Error& e) {
      fail(ErrorKind::kFormat, std::string("inconsistent checkpoint: ") + e.what());
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const VitModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "failed writing checkpoint " + path.string());
}

VitModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace vitslim
