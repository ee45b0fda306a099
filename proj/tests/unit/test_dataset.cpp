// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "copilot/dataset/generate.hpp"
#include "copilot/dataset/shard.hpp"
#include "copilot/dataset/splits.hpp"
#include "copilot/dataset/tensor_io.hpp"
#include "copilot/dataset/window.hpp"
#include "copilot/sim/collision.hpp"
#include "fixtures.hpp"

namespace copilot::data {
namespace {

namespace fs = std::filesystem;
using testing::box;
using testing::open_scene;
using testing::temp_dir;

const sim::BodyModel& body() { return sim::BodyModel::standard(); }

DatasetConfig small_config(int frames, int horizon, int stride) {
  DatasetConfig cfg;
  cfg.frames = frames;
  cfg.horizon = horizon;
  cfg.stride = stride;
  cfg.views = 2;
  cfg.intrinsics.width = 8;
  cfg.intrinsics.height = 8;
  return cfg;
}

/// Straight walk along +x, optionally ending in a recorded collision.
sim::MotionSequence straight_walk(int frames, std::optional<int> collision_at) {
  sim::MotionSequence seq;
  seq.fps = 10.0;
  const int n = collision_at ? *collision_at + 1 : frames;
  for (int f = 0; f < n; ++f) {
    seq.states.push_back(
        sim::pose_body(body(), {1.0 + 0.1 * f, 10.0, 0.95}, 0.0, 0.3 * f));
  }
  if (collision_at) {
    const auto& last = seq.states.back();
    sim::CollisionEvent e;
    e.timestep = *collision_at;
    e.contact_points = {last.joints[0] + sim::Vec3(0.1, 0, 0)};
    e.colliding_joints = sim::assign_joints(e.contact_points, last);
    seq.terminal_event = e;
  }
  return seq;
}

const sim::Scene& far_scene() {
  static const sim::Scene s = open_scene(20.0, {box(19, 19, 0, 20, 20, 1)});
  return s;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- windows -----------------------------------------------------------------

TEST(SliceWindows, CollisionAtFrame45) {
  const auto cfg = small_config(30, 30, 30);
  const auto windows = slice_windows(straight_walk(0, 45), far_scene(), cfg, "seq");
  ASSERT_EQ(windows.size(), 1u);
  EXPECT_EQ(windows[0].window_id, "seq/0");
  EXPECT_TRUE(windows[0].y_col);
  EXPECT_TRUE(windows[0].y_joint[0]);
  EXPECT_EQ(validate_window(windows[0]), "");
}

TEST(SliceWindows, NoCollisionMeansAllNegative) {
  const auto cfg = small_config(10, 10, 5);
  const auto windows = slice_windows(straight_walk(60, std::nullopt), far_scene(), cfg, "s");
  ASSERT_FALSE(windows.empty());
  for (const auto& w : windows) {
    EXPECT_FALSE(w.y_col);
    for (int v = 0; v < w.views; ++v) {
      for (int t = 0; t < w.frames; ++t) EXPECT_FALSE(w.map_is_valid(v, t));
    }
    EXPECT_TRUE(w.y_map.empty());
    EXPECT_EQ(validate_window(w), "");
  }
}

TEST(SliceWindows, ShortSequenceGivesNothing) {
  const auto cfg = small_config(10, 10, 10);
  EXPECT_TRUE(slice_windows(straight_walk(5, std::nullopt), far_scene(), cfg, "s").empty());
  EXPECT_TRUE(slice_windows(straight_walk(0, 7), far_scene(), cfg, "s").empty());
}

struct Recount {
  int windows = 0;
  int positives = 0;
};

/// Scans the terminal timestep directly: windows start every stride frames;
/// those whose observation reaches the collision are dropped, and without a
/// collision the whole horizon must have been simulated.
Recount recount(const sim::MotionSequence& seq, const DatasetConfig& cfg) {
  Recount r;
  const int n = seq.size();
  for (int s = 0; s + cfg.frames <= n; s += cfg.stride) {
    if (seq.terminal_event) {
      const int c = seq.terminal_event->timestep;
      if (c < s + cfg.frames) continue;
      ++r.windows;
      r.positives += c < s + cfg.frames + cfg.horizon;
    } else if (s + cfg.frames + cfg.horizon <= n) {
      ++r.windows;
    }
  }
  return r;
}

TEST(SliceWindows, LabelCountsMatchRecount) {
  const auto cfg = small_config(10, 10, 5);
  int total_pos = 0;
  for (int i = 0; i < 50; ++i) {
    const auto scene = sim::generate_scene(200 + i % 10);
    const auto seq = sim::sample_motion(scene, i, 10.0, 60);
    const auto windows = slice_windows(seq, scene, cfg, "s" + std::to_string(i));
    const auto expected = recount(seq, cfg);
    EXPECT_EQ(static_cast<int>(windows.size()), expected.windows);
    int pos = 0;
    for (const auto& w : windows) {
      pos += w.y_col;
      EXPECT_EQ(validate_window(w), "") << w.window_id;
    }
    EXPECT_EQ(pos, expected.positives);
    EXPECT_EQ(window_labels(seq, cfg).size(), windows.size());
    total_pos += pos;
  }
  EXPECT_GT(total_pos, 0);
}

TEST(SliceWindows, ValidHeatmapsSumToOne) {
  const auto cfg = small_config(10, 10, 10);
  int valid = 0;
  for (int i = 0; i < 30; ++i) {
    const auto scene = sim::generate_scene(300 + i);
    for (const auto& w : slice_windows(sim::sample_motion(scene, i, 10.0, 60), scene, cfg, "s")) {
      for (int v = 0; v < w.views; ++v) {
        for (int t = 0; t < w.frames; ++t) {
          if (!w.map_is_valid(v, t)) continue;
          ++valid;
          const auto h = w.heatmap(v, t);
          EXPECT_NEAR(std::accumulate(h.values.begin(), h.values.end(), 0.0), 1.0, 1e-5);
        }
      }
    }
  }
  EXPECT_GT(valid, 0);
}

TEST(Window, SelectViewsKeepsLabelsAndSlices) {
  auto cfg = small_config(10, 10, 10);
  cfg.views = 3;
  const auto w = slice_windows(straight_walk(0, 25), far_scene(), cfg, "s").front();
  const std::vector<int> pick = {2, 0};
  const Window s = select_window_views(w, pick);
  EXPECT_EQ(s.mounts, pick);
  EXPECT_EQ(s.views, 2);
  EXPECT_EQ(s.y_col, w.y_col);
  EXPECT_EQ(s.y_joint, w.y_joint);
  const std::size_t frame = w.pixels();
  for (int t = 0; t < w.frames; ++t) {
    EXPECT_TRUE(std::equal(s.depth.begin() + t * frame, s.depth.begin() + (t + 1) * frame,
                           w.depth.begin() + (2 * w.frames + t) * frame));
    EXPECT_EQ(s.map_is_valid(1, t), w.map_is_valid(0, t));
  }
  EXPECT_EQ(validate_window(s), "");
  const std::vector<int> missing = {5};
  EXPECT_THROW(select_window_views(w, missing), ContractViolation);
}

TEST(Window, ValidationCatchesLabelInconsistency) {
  const auto cfg = small_config(10, 10, 10);
  auto w = slice_windows(straight_walk(0, 25), far_scene(), cfg, "s").back();
  ASSERT_TRUE(w.y_col);
  w.y_joint.fill(false);
  EXPECT_NE(validate_window(w), "");
}

// ---- container and shards ----------------------------------------------------

TEST(Crc32c, KnownVector) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32c(std::as_bytes(std::span(s.data(), s.size()))), 0xE3069283u);
}

std::vector<Window> fixture_windows() {
  auto cfg = small_config(10, 10, 5);
  cfg.modality = Modality::kRgbd;
  auto a = slice_windows(straight_walk(0, 27), far_scene(), cfg, "a");
  auto b = slice_windows(straight_walk(40, std::nullopt), far_scene(), cfg, "b");
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST(Shard, RoundTripIsIdentity) {
  const auto dir = temp_dir("shard_rt");
  const auto windows = fixture_windows();
  const auto manifest = write_shard(windows, dir / "s");
  EXPECT_EQ(manifest.window_count(), windows.size());
  const auto back = read_shard(dir / "s");
  ASSERT_EQ(back.size(), windows.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_TRUE(back[i] == windows[i]);
}

TEST(Shard, PartialReadsDropTensors) {
  const auto dir = temp_dir("shard_partial");
  const auto windows = fixture_windows();
  write_shard(windows, dir / "s");
  ReadOptions opts;
  opts.rgb = false;
  opts.maps = false;
  const auto back = read_shard(dir / "s", opts);
  EXPECT_TRUE(back[0].rgb.empty());
  EXPECT_EQ(back[0].depth, windows[0].depth);
  EXPECT_EQ(back[0].y_col, windows[0].y_col);
}

ShardErrorCode read_error(const fs::path& dir) {
  try {
    read_shard(dir);
  } catch (const ShardError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ShardError raised";
  return ShardErrorCode::kIo;
}

void patch_byte(const fs::path& file, std::uint64_t offset, std::uint8_t xor_mask) {
  std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char c;
  f.get(c);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(static_cast<char>(c ^ xor_mask));
}

TEST(Shard, CorruptedPayloadIsAChecksumError) {
  const auto dir = temp_dir("shard_crc");
  write_shard(fixture_windows(), dir / "s");
  const auto manifest = read_manifest(dir / "s");
  const auto rec = record_from_json(
      manifest.doc.at("windows").at(0).at("tensors").begin().value());
  patch_byte(dir / "s" / "data.bin", rec.payload_offset + 3, 0x40);
  EXPECT_EQ(read_error(dir / "s"), ShardErrorCode::kChecksumMismatch);
}

TEST(Shard, VersionMismatchAndBadMagicAreDistinct) {
  const auto dir = temp_dir("shard_version");
  write_shard(fixture_windows(), dir / "v");
  patch_byte(dir / "v" / "data.bin", 4, 0x07);
  EXPECT_EQ(read_error(dir / "v"), ShardErrorCode::kVersionMismatch);

  write_shard(fixture_windows(), dir / "m");
  patch_byte(dir / "m" / "data.bin", 0, 0x01);
  EXPECT_EQ(read_error(dir / "m"), ShardErrorCode::kBadMagic);
}

TEST(Shard, TruncatedFileIsReported) {
  const auto dir = temp_dir("shard_trunc");
  write_shard(fixture_windows(), dir / "s");
  const auto file = dir / "s" / "data.bin";
  fs::resize_file(file, fs::file_size(file) / 2);
  EXPECT_EQ(read_error(dir / "s"), ShardErrorCode::kTruncated);
}

TEST(Shard, MissingShardIsAnIoError) {
  EXPECT_EQ(read_error(temp_dir("shard_missing") / "nothing"), ShardErrorCode::kIo);
}

// ---- splits --------------------------------------------------------------------

std::vector<std::string> scene_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("scene_" + std::to_string(i));
  return ids;
}

TEST(Splits, TenScenesTwoHeldOut) {
  const auto s = make_splits(scene_ids(10), 5, 2);
  EXPECT_EQ(s.train_scenes.size(), 8u);
  EXPECT_EQ(s.unseen_scenes.size(), 2u);
  for (const auto& id : s.unseen_scenes) {
    EXPECT_EQ(std::count(s.train_scenes.begin(), s.train_scenes.end(), id), 0);
  }
  EXPECT_TRUE(s == make_splits(scene_ids(10), 5, 2));
}

TEST(Splits, IndependentOfInputOrderAndSeedSensitive) {
  auto ids = scene_ids(12);
  auto reversed = ids;
  std::reverse(reversed.begin(), reversed.end());
  std::set<std::vector<std::string>> held;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = make_splits(ids, seed, 3);
    EXPECT_TRUE(a == make_splits(reversed, seed, 3));
    std::set<std::string> all(a.train_scenes.begin(), a.train_scenes.end());
    all.insert(a.unseen_scenes.begin(), a.unseen_scenes.end());
    EXPECT_EQ(all.size(), 12u);
    held.insert(a.unseen_scenes);
  }
  EXPECT_GT(held.size(), 10u);
}

TEST(Splits, TooManyHeldOutIsAnError) {
  EXPECT_THROW(make_splits(scene_ids(4), 0, 4), ConfigError);
  EXPECT_THROW(make_splits(scene_ids(4), 0, -1), ConfigError);
  const auto s = make_splits(scene_ids(4), 0, 1);
  EXPECT_TRUE(s == splits_from_json(splits_to_json(s)));
}

// ---- end-to-end generation ------------------------------------------------------

DatagenConfig tiny_datagen(std::uint64_t seed, int workers) {
  DatagenConfig cfg;
  cfg.seed = seed;
  cfg.scenes = 4;
  cfg.unseen_scenes = 1;
  cfg.train_sequences = 4;
  cfg.motion_eval_sequences = 2;
  cfg.unseen_sequences = 3;
  cfg.max_frames = 40;
  cfg.workers = workers;
  cfg.data.intrinsics.width = 16;
  cfg.data.intrinsics.height = 16;
  return cfg;
}

std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), root).string()] = file_bytes(e.path());
    }
  }
  return files;
}

TEST(Generate, RerunIsByteIdenticalForAnyWorkerCount) {
  const auto dir = temp_dir("datagen_repro");
  generate_dataset(tiny_datagen(3, 1), dir / "a");
  generate_dataset(tiny_datagen(3, 3), dir / "b");
  const auto a = tree_bytes(dir / "a");
  const auto b = tree_bytes(dir / "b");
  EXPECT_GT(a.size(), 5u);
  EXPECT_TRUE(a == b);
  generate_dataset(tiny_datagen(4, 1), dir / "c");
  EXPECT_FALSE(a == tree_bytes(dir / "c"));
}

TEST(Generate, HeldOutScenesNeverReachTraining) {
  const auto dir = temp_dir("datagen_splits");
  const auto summary = generate_dataset(tiny_datagen(9, 1), dir);
  const std::set<std::string> unseen(summary.splits.unseen_scenes.begin(),
                                     summary.splits.unseen_scenes.end());
  ReadOptions none{false, false, false};
  std::set<std::string> train_ids;
  for (const auto& w : load_split(dir, kTrainSplit, none)) {
    EXPECT_EQ(unseen.count(w.scene_id), 0u);
    train_ids.insert(w.window_id);
  }
  for (const auto& w : load_split(dir, kUnseenMotionSplit, none)) {
    EXPECT_EQ(unseen.count(w.scene_id), 0u);
    EXPECT_EQ(train_ids.count(w.window_id), 0u);
  }
  for (const auto& w : load_split(dir, kUnseenSceneSplit, none)) {
    EXPECT_EQ(unseen.count(w.scene_id), 1u);
  }
  for (const auto& [split, s] : summary.per_split) {
    EXPECT_EQ(load_split(dir, split, none).size(), s.windows) << split;
  }
}

TEST(Generate, ConfigJsonRoundTrip) {
  const auto cfg = tiny_datagen(5, 0);
  const auto j = datagen_config_to_json(cfg);
  EXPECT_EQ(datagen_config_to_json(datagen_config_from_json(j)), j);
  DatasetConfig bad;
  bad.frames = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

}  // namespace
}  // namespace copilot::data
