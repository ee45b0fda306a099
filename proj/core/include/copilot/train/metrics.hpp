// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/sim/collision.hpp"

namespace copilot::train {

inline constexpr double kDecisionThreshold = 0.5;

/// Model outputs and ground truth for one window.
struct WindowPrediction {
  std::string window_id;
  double col_prob = 0.0;
  std::vector<double> joint_prob;
  bool col_true = false;
  sim::JointLabels joint_true{};
};

struct JointMetrics {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int tn = 0;
  /// 0 when the joint was never predicted positive.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Whether the joint has a ground-truth positive and enters the average.
  bool in_macro = false;
};

/// Col accuracy over all windows and per-joint precision / recall / F1
/// over all windows at threshold 0.5, macro-averaged over the joints with
/// at least one ground-truth positive.
struct MetricsReport {
  std::string split;
  std::size_t windows = 0;
  std::size_t positives = 0;
  double col_accuracy = 0.0;
  /// Accuracy of always predicting the more frequent class.
  double majority_baseline = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int macro_joints = 0;
  std::vector<JointMetrics> per_joint;
};

/// Throws ContractViolation on an empty set.
MetricsReport compute_metrics(std::span<const WindowPrediction> preds,
                              const std::string& split);

nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& doc);

/// Plain-text table with one row per report: Split, Col, Prec, Rec, F1
/// (percentages).
std::string metrics_table(std::span<const MetricsReport> reports,
                          const std::string& title = "");

}  // namespace copilot::train
