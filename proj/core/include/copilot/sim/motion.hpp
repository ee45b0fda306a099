// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/common/error.hpp"
#include "copilot/common/rng.hpp"
#include "copilot/sim/body.hpp"
#include "copilot/sim/collision.hpp"
#include "copilot/sim/scene.hpp"

namespace copilot::sim {

/// Scene-agnostic walking: speed drifts inside [min_speed, max_speed],
/// heading follows a turn rate that random-walks inside +-max_turn_rate.
struct MotionParams {
  double min_speed = 0.5;          // m/s
  double max_speed = 1.5;          // m/s
  double max_turn_rate = 0.6;      // rad/s
  double turn_rate_noise = 1.2;    // rad/s per sqrt(s)
  double speed_noise = 0.15;       // m/s per sqrt(s)
  int start_attempts = 100;
  /// Start positions keep this distance from the scene bounds.
  double start_margin = 0.5;
};

/// Nominal per-step controls. Step f moves the body from frame f to f + 1.
struct MotionPlan {
  double fps = 10.0;
  std::vector<double> speed;          // m/s
  std::vector<double> heading_delta;  // rad
};

struct MotionSequence {
  double fps = 10.0;
  std::vector<BodyState> states;
  /// Present iff the sequence was cut short by a collision at states.back().
  std::optional<CollisionEvent> terminal_event;

  int size() const { return static_cast<int>(states.size()); }
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

MotionPlan make_plan(Rng& rng, double fps, int steps,
                     const MotionParams& params = {});

/// One integration step. `yaw_adjust` is added to the heading on top of the
/// nominal increment, which is how the avoidance controller steers.
BodyState advance(const BodyModel& model, const BodyState& state,
                  double speed, double heading_delta, double yaw_adjust,
                  double fps);

/// Collision-free start pose drawn from `rng`; throws PlacementError after
/// params.start_attempts failures.
BodyState sample_start(const Scene& scene, const BodyModel& model, Rng& rng,
                       const MotionParams& params = {});

/// Integrates `plan` from `start` until `max_frames` states exist or the
/// first collision, whichever comes first.
MotionSequence rollout(const Scene& scene, const BodyModel& model,
                       const BodyState& start, const MotionPlan& plan,
                       int max_frames);

/// Start pose plus nominal plan, both drawn from `seed`.
struct MotionSeed {
  BodyState start;
  MotionPlan plan;
};
MotionSeed draw_motion(const Scene& scene, const BodyModel& model,
                       std::uint64_t seed, double fps, int max_frames,
                       const MotionParams& params = {});

MotionSequence sample_motion(const Scene& scene, std::uint64_t seed,
                             double fps, int max_frames,
                             const MotionParams& params = {},
                             const BodyModel& model = BodyModel::standard());

nlohmann::json motion_params_to_json(const MotionParams& params);
MotionParams motion_params_from_json(const nlohmann::json& doc);

}  // namespace copilot::sim
