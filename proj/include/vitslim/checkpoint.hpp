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

#ifndef VITSLIM_CHECKPOINT_HPP_
#define VITSLIM_CHECKPOINT_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "vitslim/model.hpp"

namespace vitslim {

// Checkpoint layout (all integers little-endian):
//
//   [0, 4)    magic "EFLX"
//   [4, 8)    u32 version = 1
//   [8, 16)   u64 header length L
//   [16, 16+L) UTF-8 JSON header
//   zero padding up to the next multiple of 64: the payload section
//   payloads, each at a 64-byte aligned offset relative to the payload section
//
// Header: {"__metadata__": {...}, "<tensor>": {"dtype": "f32"|"f16"|"i8",
// "shape": [...], "offset": n}, ...}. Metadata carries the model config and
// the surviving channel ids of every MLP. Quantized linears store
// "<layer>.weight" as i8 plus f32 "<layer>.bias", "<layer>.weight_scales",
// "<layer>.eq_scales", "<layer>.act_scale" and "<layer>.alpha".

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kPayloadAlignment = 64;

std::vector<std::byte> serialize_checkpoint(const VitModel& model);
VitModel deserialize_checkpoint(std::span<const std::byte> bytes);

void save_checkpoint(const VitModel& model, const std::filesystem::path& path);
VitModel load_checkpoint(const std::filesystem::path& path);

}  // namespace vitslim

#endif  // VITSLIM_CHECKPOINT_HPP_
