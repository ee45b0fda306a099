// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "copilot/dataset/tensor_io.hpp"
#include "copilot/dataset/window.hpp"

namespace copilot::data {

/// Shard directory: manifest.json + data.bin.
///
/// manifest.json holds {format, version, config, windows: [{window_id,
/// scene_id, modality, views, frames, height, width, mounts, y_col,
/// tensors: {name: record}}], summary: {windows, positives,
/// positive_fraction}}.
struct ShardManifest {
  nlohmann::json doc;

  std::size_t window_count() const;
  std::size_t positive_count() const;
};

struct ReadOptions {
  bool rgb = true;
  bool depth = true;
  bool maps = true;
};

ShardManifest write_shard(std::span<const Window> windows,
                          const std::filesystem::path& dir,
                          const nlohmann::json& config_echo = {});

ShardManifest read_manifest(const std::filesystem::path& dir);

std::vector<Window> read_shard(const std::filesystem::path& dir,
                               const ReadOptions& options = {});

}  // namespace copilot::data
