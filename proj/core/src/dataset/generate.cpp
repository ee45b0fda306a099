// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/dataset/generate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "copilot/common/rng.hpp"

namespace copilot::data {
namespace {

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", index);
  return buf;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::trunc);
  out << doc.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

struct SceneResult {
  std::map<std::string, SplitSummary> per_split;
  std::exception_ptr error;
};

}  // namespace

nlohmann::json datagen_config_to_json(const DatagenConfig& cfg) {
  return {
      {"seed", cfg.seed},
      {"scenes", cfg.scenes},
      {"unseen_scenes", cfg.unseen_scenes},
      {"train_sequences", cfg.train_sequences},
      {"motion_eval_sequences", cfg.motion_eval_sequences},
      {"unseen_sequences", cfg.unseen_sequences},
      {"max_frames", cfg.max_frames},
      {"scene", sim::scene_params_to_json(cfg.scene)},
      {"motion", sim::motion_params_to_json(cfg.motion)},
      {"data", dataset_config_to_json(cfg.data)},
  };
}

DatagenConfig datagen_config_from_json(const nlohmann::json& doc) {
  DatagenConfig cfg;
  auto read = [&](const char* key, auto& field) {
    if (doc.contains(key)) doc.at(key).get_to(field);
  };
  read("seed", cfg.seed);
  read("scenes", cfg.scenes);
  read("unseen_scenes", cfg.unseen_scenes);
  read("train_sequences", cfg.train_sequences);
  read("motion_eval_sequences", cfg.motion_eval_sequences);
  read("unseen_sequences", cfg.unseen_sequences);
  read("max_frames", cfg.max_frames);
  read("workers", cfg.workers);
  if (doc.contains("scene")) cfg.scene = sim::scene_params_from_json(doc["scene"]);
  if (doc.contains("motion")) {
    cfg.motion = sim::motion_params_from_json(doc["motion"]);
  }
  if (doc.contains("data")) cfg.data = dataset_config_from_json(doc["data"]);
  return cfg;
}

nlohmann::json datagen_summary_to_json(const DatagenSummary& s) {
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [name, sum] : s.per_split) {
    splits[name] = {
        {"windows", sum.windows},
        {"positives", sum.positives},
        {"positive_fraction",
         sum.windows ? static_cast<double>(sum.positives) / sum.windows : 0.0},
        {"sequences", sum.sequences},
        {"collided_sequences", sum.collided_sequences},
    };
  }
  return {{"splits", splits}, {"scene_splits", splits_to_json(s.splits)}};
}

std::uint64_t sequence_seed(std::uint64_t seed, int scene_index, int k) {
  return Rng::derive(seed ^ 0x5eed5eedULL,
                     static_cast<std::uint64_t>(scene_index) * 1000003ULL +
                         static_cast<std::uint64_t>(k))
      .next_u64();
}

DatagenSummary generate_dataset(const DatagenConfig& cfg,
                                const std::filesystem::path& out) {
  if (cfg.scenes < 1) throw ConfigError("datagen: at least one scene is required");
  if (cfg.max_frames < 1) throw ConfigError("datagen: max_frames must be >= 1");
  cfg.data.validate();

  std::vector<std::string> ids;
  for (int i = 0; i < cfg.scenes; ++i) ids.push_back(scene_name(i));
  DatagenSummary summary;
  summary.splits = make_splits(ids, cfg.seed, cfg.unseen_scenes);

  std::filesystem::create_directories(out / "scenes");
  const nlohmann::json config_echo = datagen_config_to_json(cfg);
  write_json(out / "config.json", config_echo);
  write_json(out / "splits.json", splits_to_json(summary.splits));

  std::vector<SceneResult> results(cfg.scenes);
  auto process = [&](int i) {
    const std::string& id = ids[i];
    try {
      sim::Scene scene =
          sim::generate_scene(Rng::derive(cfg.seed, i).next_u64(), cfg.scene);
      scene.scene_id = id;
      write_json(out / "scenes" / (id + ".json"), sim::scene_to_json(scene));

      const bool unseen =
          std::binary_search(summary.splits.unseen_scenes.begin(),
                             summary.splits.unseen_scenes.end(), id);
      struct Part {
        const char* split;
        int first;
        int count;
      };
      std::vector<Part> parts;
      if (unseen) {
        parts.push_back({kUnseenSceneSplit, 0, cfg.unseen_sequences});
      } else {
        parts.push_back({kTrainSplit, 0, cfg.train_sequences});
        parts.push_back(
            {kUnseenMotionSplit, cfg.train_sequences, cfg.motion_eval_sequences});
      }
      for (const auto& part : parts) {
        std::vector<Window> windows;
        SplitSummary& sum = results[i].per_split[part.split];
        for (int k = part.first; k < part.first + part.count; ++k) {
          const auto seq = sim::sample_motion(
              scene, sequence_seed(cfg.seed, i, k), cfg.data.fps,
              cfg.max_frames, cfg.motion);
          ++sum.sequences;
          sum.collided_sequences += seq.terminal_event ? 1 : 0;
          auto w = slice_windows(seq, scene, cfg.data,
                                 id + "/seq_" + std::to_string(k));
          for (auto& win : w) {
            sum.positives += win.y_col ? 1 : 0;
            windows.push_back(std::move(win));
          }
        }
        sum.windows += windows.size();
        nlohmann::json echo = {{"split", part.split},
                               {"scene_id", id},
                               {"datagen", config_echo}};
        write_shard(windows, out / "shards" / part.split / id, echo);
      }
    } catch (const std::exception& e) {
      results[i].error = std::make_exception_ptr(
          Error("datagen failed for " + id + ": " + e.what()));
    }
  };

  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, cfg.scenes);
  std::atomic<int> next{0};
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < cfg.scenes; i = next++) process(i);
      });
    }
  }
  for (const auto& r : results) {
    if (r.error) std::rethrow_exception(r.error);
  }
  for (const auto& r : results) {
    for (const auto& [split, s] : r.per_split) {
      auto& acc = summary.per_split[split];
      acc.windows += s.windows;
      acc.positives += s.positives;
      acc.sequences += s.sequences;
      acc.collided_sequences += s.collided_sequences;
    }
  }
  write_json(out / "summary.json", datagen_summary_to_json(summary));
  return summary;
}

std::vector<std::filesystem::path> split_shards(const std::filesystem::path& root,
                                                std::string_view split) {
  std::vector<std::filesystem::path> dirs;
  const auto base = root / "shards" / std::string(split);
  if (!std::filesystem::is_directory(base)) {
    throw Error("no '" + std::string(split) + "' shards under " + root.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(base)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<Window> load_split(const std::filesystem::path& root,
                               std::string_view split,
                               const ReadOptions& options) {
  std::vector<Window> all;
  for (const auto& dir : split_shards(root, split)) {
    auto part = read_shard(dir, options);
    for (auto& w : part) all.push_back(std::move(w));
  }
  return all;
}

}  // namespace copilot::data
