// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/train/metrics.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "copilot/common/error.hpp"
#include "copilot/sim/body.hpp"

namespace copilot::train {

MetricsReport compute_metrics(std::span<const WindowPrediction> preds,
                              const std::string& split) {
  if (preds.empty()) {
    throw ContractViolation("cannot compute metrics for empty split '" +
                            split + "'");
  }
  MetricsReport m;
  m.split = split;
  m.windows = preds.size();
  m.per_joint.assign(sim::kNumJoints, {});
  std::size_t correct = 0;
  for (const auto& p : preds) {
    if (p.joint_prob.size() != static_cast<std::size_t>(sim::kNumJoints)) {
      throw ContractViolation("window " + p.window_id +
                              " has the wrong number of joint outputs");
    }
    const bool col_hat = p.col_prob >= kDecisionThreshold;
    correct += col_hat == p.col_true;
    m.positives += p.col_true;
    for (int j = 0; j < sim::kNumJoints; ++j) {
      const bool hat = p.joint_prob[j] >= kDecisionThreshold;
      const bool truth = p.joint_true[j];
      auto& jm = m.per_joint[j];
      if (hat && truth) ++jm.tp;
      else if (hat) ++jm.fp;
      else if (truth) ++jm.fn;
      else ++jm.tn;
    }
  }
  const double n = static_cast<double>(m.windows);
  m.col_accuracy = static_cast<double>(correct) / n;
  const double pos_rate = static_cast<double>(m.positives) / n;
  m.majority_baseline = std::max(pos_rate, 1.0 - pos_rate);
  for (auto& jm : m.per_joint) {
    if (jm.tp + jm.fp > 0) {
      jm.precision = static_cast<double>(jm.tp) / (jm.tp + jm.fp);
    }
    if (jm.tp + jm.fn > 0) {
      jm.recall = static_cast<double>(jm.tp) / (jm.tp + jm.fn);
    }
    if (jm.precision + jm.recall > 0.0) {
      jm.f1 = 2.0 * jm.precision * jm.recall / (jm.precision + jm.recall);
    }
    jm.in_macro = jm.tp + jm.fn > 0;
    if (jm.in_macro) {
      m.precision += jm.precision;
      m.recall += jm.recall;
      m.f1 += jm.f1;
      ++m.macro_joints;
    }
  }
  if (m.macro_joints > 0) {
    m.precision /= m.macro_joints;
    m.recall /= m.macro_joints;
    m.f1 /= m.macro_joints;
  }
  return m;
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json joints = nlohmann::json::array();
  for (std::size_t j = 0; j < m.per_joint.size(); ++j) {
    const auto& jm = m.per_joint[j];
    joints.push_back({
        {"joint", sim::joint_name(static_cast<int>(j))},
        {"tp", jm.tp},
        {"fp", jm.fp},
        {"fn", jm.fn},
        {"tn", jm.tn},
        {"precision", jm.precision},
        {"recall", jm.recall},
        {"f1", jm.f1},
        {"in_macro", jm.in_macro},
    });
  }
  return {
      {"split", m.split},
      {"windows", m.windows},
      {"positives", m.positives},
      {"col_accuracy", m.col_accuracy},
      {"majority_baseline", m.majority_baseline},
      {"precision", m.precision},
      {"recall", m.recall},
      {"f1", m.f1},
      {"macro_joints", m.macro_joints},
      {"per_joint", joints},
  };
}

MetricsReport metrics_from_json(const nlohmann::json& doc) {
  MetricsReport m;
  m.split = doc.at("split").get<std::string>();
  m.windows = doc.at("windows").get<std::size_t>();
  m.positives = doc.at("positives").get<std::size_t>();
  m.col_accuracy = doc.at("col_accuracy").get<double>();
  m.majority_baseline = doc.at("majority_baseline").get<double>();
  m.precision = doc.at("precision").get<double>();
  m.recall = doc.at("recall").get<double>();
  m.f1 = doc.at("f1").get<double>();
  m.macro_joints = doc.at("macro_joints").get<int>();
  for (const auto& j : doc.at("per_joint")) {
    JointMetrics jm;
    jm.tp = j.at("tp").get<int>();
    jm.fp = j.at("fp").get<int>();
    jm.fn = j.at("fn").get<int>();
    jm.tn = j.at("tn").get<int>();
    jm.precision = j.at("precision").get<double>();
    jm.recall = j.at("recall").get<double>();
    jm.f1 = j.at("f1").get<double>();
    jm.in_macro = j.at("in_macro").get<bool>();
    m.per_joint.push_back(jm);
  }
  return m;
}

std::string metrics_table(std::span<const MetricsReport> reports,
                          const std::string& title) {
  std::ostringstream out;
  if (!title.empty()) out << title << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %8s %8s\n", "Split",
                "Windows", "Col", "Prec", "Rec", "F1");
  out << line;
  for (const auto& m : reports) {
    std::snprintf(line, sizeof line, "%-16s %8zu %8.1f %8.1f %8.1f %8.1f\n",
                  m.split.c_str(), m.windows, 100.0 * m.col_accuracy,
                  100.0 * m.precision, 100.0 * m.recall, 100.0 * m.f1);
    out << line;
  }
  return out.str();
}

}  // namespace copilot::train
