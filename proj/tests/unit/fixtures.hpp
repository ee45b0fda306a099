// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

// Hand-built scenes and small helpers shared by the unit tests.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "copilot/sim/scene.hpp"

namespace copilot::testing {

inline sim::Obstacle box(double x0, double y0, double z0, double x1, double y1,
                         double z1) {
  return {sim::Box{{x0, y0, z0}, {x1, y1, z1}}, sim::Vec3::Constant(0.6)};
}

inline sim::Obstacle cylinder(double cx, double cy, double r, double z0,
                              double z1) {
  return {sim::Cylinder{{cx, cy}, r, z0, z1}, sim::Vec3::Constant(0.6)};
}

/// Square room [0, size]^2 without walls holding `obstacles`.
inline sim::Scene open_scene(double size, std::vector<sim::Obstacle> obstacles,
                             const std::string& id = "fixture") {
  sim::Scene s;
  s.scene_id = id;
  s.bounds = {0.0, 0.0, size, size};
  s.obstacles = std::move(obstacles);
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("copilot_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace copilot::testing
