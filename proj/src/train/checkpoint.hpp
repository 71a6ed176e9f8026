// Copyright 2026 The HSCJN Authors. All Rights Reserved.
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

// Binary checkpoints, little-endian:
//
//   "HSCJN1"
//   u32 length + JSON header (model config, vocabulary, training config,
//   step/epoch counters, RNG state, early-stopping state)
//   u32 count + parameter records
//   u32 count + optimizer moment records ("adam.m/<name>", "adam.v/<name>")
//
// A record is u32 name length, name bytes, u32 rank, u32 dims, raw float32 values.

#pragma once

#include <filesystem>
#include <string>

#include "train/trainer.hpp"

namespace hscjn::train {

inline constexpr char kCheckpointMagic[] = "HSCJN1";
inline constexpr int kCheckpointVersion = 1;

std::string serialize_checkpoint(const TrainState& state);
// Throws FormatError on a bad magic, version or truncated/corrupt content.
TrainState deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const model::ModelConfig& c);
model::ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace hscjn::train
