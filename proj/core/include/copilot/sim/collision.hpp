// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "copilot/sim/body.hpp"
#include "copilot/sim/scene.hpp"

namespace copilot::sim {

using JointLabels = std::array<bool, kNumJoints>;

struct CollisionEvent {
  int timestep = 0;
  /// One point per intersecting (sphere, obstacle) pair: the obstacle point
  /// closest to the sphere center.
  std::vector<Vec3> contact_points;
  JointLabels colliding_joints{};
};

/// Closest point of an obstacle to `p` (p itself when inside).
Vec3 closest_point(const Obstacle& obstacle, const Vec3& p);

/// Reports every body sphere touching or penetrating an obstacle. Contact
/// with the floor plane is locomotion and never reported; the body does not
/// collide with itself. The returned event has timestep 0.
std::optional<CollisionEvent> check_collision(const Scene& scene,
                                              const BodyModel& model,
                                              const BodyState& state);
std::optional<CollisionEvent> check_collision(const Scene& scene,
                                              const BodyState& state);

/// Assigns each contact to its nearest joint (lowest index wins ties).
/// Throws ContractViolation when `contacts` is empty.
JointLabels assign_joints(std::span<const Vec3> contacts,
                          const BodyState& state);

}  // namespace copilot::sim
