// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace copilot::data {

/// Scene-level partition. Training scenes also host the unseen-motion
/// evaluation sequences, which are drawn with seeds disjoint from training.
struct Splits {
  std::vector<std::string> train_scenes;
  std::vector<std::string> unseen_scenes;

  friend bool operator==(const Splits&, const Splits&) = default;
};

inline constexpr const char* kTrainSplit = "train";
inline constexpr const char* kUnseenMotionSplit = "unseen_motion";
inline constexpr const char* kUnseenSceneSplit = "unseen_scene";

/// Holds out `n_unseen` scenes chosen by a seeded shuffle. The result does
/// not depend on the order of `scene_ids`. Throws ConfigError when
/// n_unseen is negative or not smaller than the scene count.
Splits make_splits(std::vector<std::string> scene_ids, std::uint64_t seed,
                   int n_unseen);

nlohmann::json splits_to_json(const Splits& s);
Splits splits_from_json(const nlohmann::json& doc);

}  // namespace copilot::data
