// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/dataset/window.hpp"

namespace copilot::nn {

/// How the backbone mixes information across space, time and viewpoint.
enum class AttentionMode {
  /// Cross-view attention at each timestep, then joint space-time attention
  /// within each view.
  kJointStv,
  /// Attention across (view, time) at each spatial location, then spatial
  /// attention within each frame.
  kDividedStv,
  /// Joint space-time attention per view only; views meet in the heads.
  kStConcat,
  /// kJointStv restricted to the pelvis stream.
  kSingleView,
};

std::string_view attention_mode_name(AttentionMode m);
AttentionMode attention_mode_from_name(std::string_view name);

struct ModelConfig {
  int views = 3;
  /// Camera mount of each input view; empty means the canonical prefix.
  std::vector<int> mounts;
  int frames = 10;
  int image_size = 64;
  int patch = 8;
  int dim = 128;
  int heads = 4;
  int depth = 4;
  int mlp_ratio = 4;
  int joints = 10;
  AttentionMode attention = AttentionMode::kJointStv;
  data::Modality modality = data::Modality::kDepth;
  std::uint64_t init_seed = 0;

  int grid() const { return image_size / patch; }
  int tokens_per_frame() const { return grid() * grid(); }
  /// Number of 2x up-sampling stages in the heatmap head: log2(patch).
  int upsample_stages() const;
  /// Views the backbone actually consumes (1 for kSingleView).
  int stream_views() const;
  std::vector<int> resolved_mounts() const;
  /// Mounts of the consumed streams.
  std::vector<int> stream_mounts() const;
  int channels() const { return data::modality_channels(modality); }

  /// Throws ConfigError describing every violated invariant.
  void validate() const;

  /// 224 px frames, 16 px patches (14 x 14 grid), D = 768, 12 heads,
  /// 12 blocks, six views, 30 frames.
  static ModelConfig full_scale();
  /// Smallest configuration used for gradient checks: 8 px frames, 4 px
  /// patches (2 x 2 grid), D = 16, two views, two frames, one block.
  static ModelConfig tiny();
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& doc);

/// Closed-form parameter count of the network described by `cfg`.
std::size_t parameter_count(const ModelConfig& cfg);

}  // namespace copilot::nn
