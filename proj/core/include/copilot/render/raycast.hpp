// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "copilot/render/camera.hpp"
#include "copilot/sim/scene.hpp"

namespace copilot::render {

/// One egocentric observation. Images are row-major; rgb is interleaved.
struct EgoFrame {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;    // height * width * 3, in [0, 1]
  std::vector<float> depth;  // height * width, planar meters; 0 = no hit
  int view_index = 0;
  int frame_index = 0;
};

struct RayHit {
  double t = 0.0;
  int obstacle = -1;
  Vec3 normal = Vec3::Zero();
};

/// Front-face intersection of a ray with one obstacle. Hits at t <= 0 and
/// exits from inside a primitive are ignored, so a camera embedded in an
/// obstacle does not see it.
std::optional<RayHit> intersect(const sim::Obstacle& obstacle,
                                const Vec3& origin, const Vec3& dir);

/// Nearest front-face hit over all obstacles.
std::optional<RayHit> cast_ray(const sim::Scene& scene, const Vec3& origin,
                               const Vec3& dir);

inline constexpr float kBackground[3] = {0.6f, 0.7f, 0.8f};

/// Unit vector towards the fixed directional light.
Vec3 light_direction();

/// One primary ray per pixel center. Surfaces are shaded as
/// albedo * (0.35 + 0.65 * max(0, n . l)); misses get kBackground and depth 0.
/// The floor plane is not drawn.
EgoFrame render(const sim::Scene& scene, const Camera& camera);

}  // namespace copilot::render
