// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/sim/collision.hpp"

#include <algorithm>
#include <limits>

namespace copilot::sim {

Vec3 closest_point(const Obstacle& obstacle, const Vec3& p) {
  if (const auto* box = std::get_if<Box>(&obstacle.shape)) {
    return p.cwiseMax(box->min).cwiseMin(box->max);
  }
  const auto& cyl = std::get<Cylinder>(obstacle.shape);
  Vec3 q;
  const Vec2 d = p.head<2>() - cyl.center;
  const double r = d.norm();
  if (r > cyl.radius) {
    q.head<2>() = cyl.center + d * (cyl.radius / r);
  } else {
    q.head<2>() = p.head<2>();
  }
  q.z() = std::clamp(p.z(), cyl.z_min, cyl.z_max);
  return q;
}

std::optional<CollisionEvent> check_collision(const Scene& scene,
                                              const BodyModel& model,
                                              const BodyState& state) {
  std::vector<Vec3> contacts;
  for (int j = 0; j < kNumJoints; ++j) {
    const Vec3& center = state.joints[j];
    const double radius = model.joints[j].radius;
    for (const auto& obstacle : scene.obstacles) {
      const Vec3 q = closest_point(obstacle, center);
      // Touching counts as contact.
      if ((q - center).squaredNorm() <= radius * radius) {
        contacts.push_back(q);
      }
    }
  }
  if (contacts.empty()) return std::nullopt;
  CollisionEvent event;
  event.colliding_joints = assign_joints(contacts, state);
  event.contact_points = std::move(contacts);
  return event;
}

std::optional<CollisionEvent> check_collision(const Scene& scene,
                                              const BodyState& state) {
  return check_collision(scene, BodyModel::standard(), state);
}

JointLabels assign_joints(std::span<const Vec3> contacts,
                          const BodyState& state) {
  if (contacts.empty()) {
    throw ContractViolation("assign_joints: contact list is empty");
  }
  JointLabels labels{};
  for (const Vec3& c : contacts) {
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < kNumJoints; ++j) {
      const double d2 = (c - state.joints[j]).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    labels[best] = true;
  }
  return labels;
}

}  // namespace copilot::sim
