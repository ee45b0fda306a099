// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/dataset/splits.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "copilot/common/error.hpp"
#include "copilot/common/rng.hpp"

namespace copilot::data {

Splits make_splits(std::vector<std::string> scene_ids, std::uint64_t seed,
                   int n_unseen) {
  std::sort(scene_ids.begin(), scene_ids.end());
  if (std::adjacent_find(scene_ids.begin(), scene_ids.end()) != scene_ids.end()) {
    throw ConfigError("make_splits: duplicate scene ids");
  }
  if (n_unseen < 0 || n_unseen >= static_cast<int>(scene_ids.size())) {
    throw ConfigError("make_splits: n_unseen=" + std::to_string(n_unseen) +
                      " must be in [0, " + std::to_string(scene_ids.size()) +
                      ")");
  }
  Rng rng(seed);
  for (std::size_t i = scene_ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(scene_ids[i - 1], scene_ids[j]);
  }
  Splits s;
  s.unseen_scenes.assign(scene_ids.begin(), scene_ids.begin() + n_unseen);
  s.train_scenes.assign(scene_ids.begin() + n_unseen, scene_ids.end());
  std::sort(s.unseen_scenes.begin(), s.unseen_scenes.end());
  std::sort(s.train_scenes.begin(), s.train_scenes.end());
  return s;
}

nlohmann::json splits_to_json(const Splits& s) {
  return {{"train_scenes", s.train_scenes}, {"unseen_scenes", s.unseen_scenes}};
}

Splits splits_from_json(const nlohmann::json& doc) {
  Splits s;
  s.train_scenes = doc.at("train_scenes").get<std::vector<std::string>>();
  s.unseen_scenes = doc.at("unseen_scenes").get<std::vector<std::string>>();
  return s;
}

}  // namespace copilot::data
