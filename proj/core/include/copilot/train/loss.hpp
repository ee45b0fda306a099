// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "copilot/model/tensor.hpp"

namespace copilot::train {

inline constexpr double kKlEpsilon = 1e-8;
inline constexpr double kBceClamp = 1e-7;

/// Which distribution sits in the first KL argument.
enum class KlDirection {
  /// KL(pred || target) = sum pred * (log(pred + eps) - log(target + eps)).
  kPredFirst,
  /// KL(target || pred) = sum target * (log(target + eps) - log(pred + eps)).
  kTargetFirst,
};

std::string_view kl_direction_name(KlDirection d);
KlDirection kl_direction_from_name(std::string_view name);

/// KL divergence of one frame. Terms whose first-argument mass is zero
/// contribute nothing.
template <typename P, typename T>
double kl_frame(std::span<const P> pred, std::span<const T> target,
                KlDirection dir) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    const double q = target[i];
    const double a = dir == KlDirection::kPredFirst ? p : q;
    const double b = dir == KlDirection::kPredFirst ? q : p;
    if (a > 0.0) sum += a * (std::log(a + kKlEpsilon) - std::log(b + kKlEpsilon));
  }
  return sum;
}

/// d kl_frame / d pred, scaled by `scale`.
template <typename S, typename T>
nn::ColVec<S> kl_frame_grad(const nn::ColVec<S>& pred,
                            std::span<const T> target, KlDirection dir,
                            double scale) {
  nn::ColVec<S> g(pred.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = pred(i);
    const double q = target[static_cast<std::size_t>(i)];
    double d = 0.0;
    if (dir == KlDirection::kPredFirst) {
      if (p > 0.0) {
        d = std::log(p + kKlEpsilon) - std::log(q + kKlEpsilon) +
            p / (p + kKlEpsilon);
      }
    } else {
      d = -q / (p + kKlEpsilon);
    }
    g(i) = static_cast<S>(scale * d);
  }
  return g;
}

struct MapLoss {
  double value = 0.0;
  std::size_t valid_frames = 0;
  /// Set when no frame was valid; value is then 0.
  bool all_invalid = true;
};

/// Mean KL over the valid frames. pred[i] and target[i] are per-pixel
/// distributions; valid[i] masks frame i.
MapLoss loss_map(std::span<const std::vector<double>> pred,
                 std::span<const std::vector<double>> target,
                 std::span<const std::uint8_t> valid,
                 KlDirection dir = KlDirection::kPredFirst);

/// Binary cross-entropy with the prediction clamped to [c, 1 - c].
inline double bce(double p, double y) {
  const double q = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

/// d bce / d p, zero where the clamp is active.
inline double bce_grad(double p, double y) {
  if (p < kBceClamp || p > 1.0 - kBceClamp) return 0.0;
  return (p - y) / (p * (1.0 - p));
}

struct ClsLoss {
  double col = 0.0;
  double joint = 0.0;
};

/// BCE on the overall output and the per-joint outputs, both averaged over
/// the batch; the joint term is summed over joints first. pred_joint and
/// target_joint are (batch, joints) row-major.
ClsLoss loss_cls(std::span<const double> pred_col,
                 std::span<const double> target_col,
                 std::span<const double> pred_joint,
                 std::span<const double> target_joint, int joints);

struct LossWeights {
  double map = 1.0;
  double col = 1.0;
  double joint = 1.0;
};

inline double total_loss(const LossWeights& w, double map, double col,
                         double joint) {
  return w.map * map + w.col * col + w.joint * joint;
}

}  // namespace copilot::train
