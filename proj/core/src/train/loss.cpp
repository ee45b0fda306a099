// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/train/loss.hpp"

#include <string>

#include "copilot/common/error.hpp"

namespace copilot::train {

std::string_view kl_direction_name(KlDirection d) {
  return d == KlDirection::kPredFirst ? "pred_first" : "target_first";
}

KlDirection kl_direction_from_name(std::string_view name) {
  if (name == "pred_first") return KlDirection::kPredFirst;
  if (name == "target_first") return KlDirection::kTargetFirst;
  throw ConfigError("unknown KL direction '" + std::string(name) + "'");
}

MapLoss loss_map(std::span<const std::vector<double>> pred,
                 std::span<const std::vector<double>> target,
                 std::span<const std::uint8_t> valid, KlDirection dir) {
  if (pred.size() != target.size() || pred.size() != valid.size()) {
    throw ContractViolation("loss_map: frame counts differ");
  }
  MapLoss out;
  double sum = 0.0;
  for (std::size_t f = 0; f < pred.size(); ++f) {
    if (!valid[f]) continue;
    if (pred[f].size() != target[f].size()) {
      throw ContractViolation("loss_map: heatmap sizes differ");
    }
    sum += kl_frame<double, double>(pred[f], target[f], dir);
    ++out.valid_frames;
  }
  out.all_invalid = out.valid_frames == 0;
  out.value = out.all_invalid ? 0.0 : sum / static_cast<double>(out.valid_frames);
  return out;
}

ClsLoss loss_cls(std::span<const double> pred_col,
                 std::span<const double> target_col,
                 std::span<const double> pred_joint,
                 std::span<const double> target_joint, int joints) {
  const std::size_t batch = pred_col.size();
  if (target_col.size() != batch || pred_joint.size() != batch * joints ||
      target_joint.size() != batch * joints) {
    throw ContractViolation("loss_cls: shapes differ");
  }
  ClsLoss out;
  if (batch == 0) return out;
  for (std::size_t b = 0; b < batch; ++b) {
    out.col += bce(pred_col[b], target_col[b]);
    for (int j = 0; j < joints; ++j) {
      out.joint += bce(pred_joint[b * joints + j], target_joint[b * joints + j]);
    }
  }
  out.col /= static_cast<double>(batch);
  out.joint /= static_cast<double>(batch);
  return out;
}

}  // namespace copilot::train
