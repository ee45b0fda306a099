// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/dataset/shard.hpp"
#include "copilot/dataset/splits.hpp"
#include "copilot/dataset/window.hpp"
#include "copilot/sim/motion.hpp"
#include "copilot/sim/scene.hpp"

namespace copilot::data {

/// End-to-end synthetic dataset recipe.
struct DatagenConfig {
  std::uint64_t seed = 0;
  int scenes = 20;
  int unseen_scenes = 4;
  /// Sequences per training scene used for training.
  int train_sequences = 20;
  /// Extra sequences per training scene for the unseen-motion split.
  int motion_eval_sequences = 4;
  /// Sequences per held-out scene.
  int unseen_sequences = 20;
  int max_frames = 60;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  int workers = 0;
  sim::SceneParams scene;
  sim::MotionParams motion;
  DatasetConfig data;
};

nlohmann::json datagen_config_to_json(const DatagenConfig& cfg);
DatagenConfig datagen_config_from_json(const nlohmann::json& doc);

struct SplitSummary {
  std::size_t windows = 0;
  std::size_t positives = 0;
  std::size_t sequences = 0;
  std::size_t collided_sequences = 0;
};

struct DatagenSummary {
  Splits splits;
  std::map<std::string, SplitSummary> per_split;
};

nlohmann::json datagen_summary_to_json(const DatagenSummary& s);

/// Seed of the k-th sequence in scene `scene_index`. Training, motion-eval
/// and unseen-scene sequences use disjoint k ranges.
std::uint64_t sequence_seed(std::uint64_t seed, int scene_index, int k);

/// Writes out/{config.json, splits.json, summary.json, scenes/<id>.json,
/// shards/<split>/<scene_id>/}. Scenes are processed by a worker pool; the
/// output is byte-identical for a given config regardless of worker count.
DatagenSummary generate_dataset(const DatagenConfig& cfg,
                                const std::filesystem::path& out);

/// Shard directories of one split, sorted by scene id.
std::vector<std::filesystem::path> split_shards(const std::filesystem::path& root,
                                                std::string_view split);

std::vector<Window> load_split(const std::filesystem::path& root,
                               std::string_view split,
                               const ReadOptions& options = {});

}  // namespace copilot::data
