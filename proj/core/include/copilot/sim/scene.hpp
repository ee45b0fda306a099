// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "copilot/common/error.hpp"

namespace copilot::sim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Axis-aligned box, corners in meters.
struct Box {
  Vec3 min;
  Vec3 max;
};

/// Vertical (z-aligned) cylinder.
struct Cylinder {
  Vec2 center;
  double radius = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
};

struct Obstacle {
  std::variant<Box, Cylinder> shape;
  Vec3 albedo = Vec3::Constant(0.7);
};

/// Horizontal extent of a scene.
struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double depth() const { return max_y - min_y; }
  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

/// Static environment. Obstacles are convex primitives resting on or
/// floating above the floor; all lengths in meters.
struct Scene {
  std::string scene_id;
  std::uint64_t seed = 0;
  double floor_height = 0.0;
  Bounds bounds;
  std::vector<Obstacle> obstacles;

  friend bool operator==(const Scene& a, const Scene& b);
};

/// Procedural generation knobs. Defaults produce a 6 m x 6 m walled room
/// furnished with tables, cabinets, pillars and wall shelves.
struct SceneParams {
  double width = 6.0;
  double depth = 6.0;
  bool perimeter_walls = true;
  double wall_thickness = 0.2;
  double wall_height = 2.5;

  int min_obstacles = 4;
  int max_obstacles = 8;

  double box_min_size = 0.4;
  double box_max_size = 1.4;
  double box_min_height = 0.4;
  double box_max_height = 1.9;

  double cylinder_probability = 0.3;
  double cylinder_min_radius = 0.15;
  double cylinder_max_radius = 0.4;
  double cylinder_min_height = 0.5;
  double cylinder_max_height = 2.0;

  /// Probability that a box is a shelf hanging above the floor.
  double elevated_probability = 0.15;
  double elevated_min_z = 1.3;
  double elevated_max_z = 1.6;

  /// Minimum horizontal gap between interior obstacles and walls.
  double min_clearance = 0.3;
  int placement_attempts = 200;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Deterministic in (seed, params). Throws GenerationError if the requested
/// furniture cannot be placed or the scene would be empty.
Scene generate_scene(std::uint64_t seed, const SceneParams& params = {});

/// Tests the Scene invariants; returns an empty string when they hold.
std::string validate_scene(const Scene& scene);

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& doc);

nlohmann::json scene_params_to_json(const SceneParams& params);
SceneParams scene_params_from_json(const nlohmann::json& doc);

}  // namespace copilot::sim
