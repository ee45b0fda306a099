// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "copilot/model/network.hpp"

namespace copilot::nn {

using Model = CopilotModel<float>;

/// A checkpoint directory holds weights.bin (tensor container, one tensor
/// per parameter) and checkpoint.json (model config, tensor records and
/// free-form metadata such as training history).
void save_checkpoint(const Model& model, const std::filesystem::path& dir,
                     const nlohmann::json& meta = nlohmann::json::object());

struct LoadedCheckpoint {
  Model model;
  nlohmann::json meta;
};

/// Throws data::ShardError for container damage and ConfigError for a
/// malformed description.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace copilot::nn
