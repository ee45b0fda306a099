// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/render/camera.hpp"
#include "copilot/render/heatmap.hpp"
#include "copilot/sim/collision.hpp"
#include "copilot/sim/motion.hpp"

namespace copilot::data {

enum class Modality { kRgb, kDepth, kRgbd };

std::string_view modality_name(Modality m);
Modality modality_from_name(std::string_view name);
int modality_channels(Modality m);
bool has_rgb(Modality m);
bool has_depth(Modality m);

/// Windowing and rendering parameters. Frame counts are in frames at `fps`.
struct DatasetConfig {
  int frames = 10;    // observed history T
  int horizon = 10;   // prediction horizon H
  double fps = 10.0;
  int stride = 10;
  int views = 3;
  /// Camera mounts, one per view; empty means the canonical prefix.
  std::vector<int> mounts;
  render::Intrinsics intrinsics;
  Modality modality = Modality::kRgbd;
  /// Heatmap kernel width; <= 0 selects 5% of the image width.
  double sigma_px = 0.0;

  std::vector<int> resolved_mounts() const;
  double resolved_sigma() const;
  /// Throws ConfigError when an invariant is broken.
  void validate() const;
};

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& doc);

/// One supervised sample: V x T synchronized frames plus labels.
///
/// Tensor layouts (row-major): rgb (V, T, H, W, 3) as u8, depth
/// (V, T, H, W) in meters, map_valid (V, T), y_map (n_valid, H, W) holding
/// only the valid heatmaps in (v, t) order.
struct Window {
  std::string window_id;
  std::string scene_id;
  Modality modality = Modality::kRgbd;
  int views = 0;
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<int> mounts;

  std::vector<std::uint8_t> rgb;
  std::vector<float> depth;

  bool y_col = false;
  sim::JointLabels y_joint{};
  std::vector<std::uint8_t> map_valid;
  std::vector<float> y_map;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool map_is_valid(int v, int t) const { return map_valid[v * frames + t]; }
  /// Dense heatmap for (v, t); all-zero and invalid when not annotated.
  render::Heatmap heatmap(int v, int t) const;
  /// Offset of (v, t) inside y_map, or -1 when invalid.
  std::ptrdiff_t map_offset(int v, int t) const;

  friend bool operator==(const Window&, const Window&) = default;
};

/// Label invariants: y_col == OR(y_joint), heatmaps only on positives,
/// valid heatmaps sum to one. Returns an empty string when they hold.
std::string validate_window(const Window& w);

/// Keeps the views whose mounts are listed, in that order. Labels are
/// unchanged. Throws ContractViolation when a mount is missing.
Window select_window_views(const Window& w, std::span<const int> mounts);

/// Cuts a sequence into windows starting every `stride` frames.
///
/// A window starting at s observes [s, s + T). It is positive iff the
/// terminal collision happens in [s + T, s + T + H). Windows whose
/// observation span reaches the terminal frame are dropped, and in
/// sequences without a collision only windows whose whole horizon was
/// simulated are kept. Positive windows carry per-joint labels from the
/// terminal contacts and heatmaps obtained by projecting those contacts
/// into every observed frame's cameras.
std::vector<Window> slice_windows(const sim::MotionSequence& seq,
                                  const sim::Scene& scene,
                                  const DatasetConfig& cfg,
                                  std::string_view sequence_id,
                                  const sim::BodyModel& model =
                                      sim::BodyModel::standard());

/// Start frames slice_windows would emit, with their labels, without
/// rendering anything.
struct WindowLabel {
  int start = 0;
  bool y_col = false;
};
std::vector<WindowLabel> window_labels(const sim::MotionSequence& seq,
                                       const DatasetConfig& cfg);

}  // namespace copilot::data
