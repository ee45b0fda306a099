// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/render/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace copilot::render {
namespace {

constexpr double kMinT = 1e-9;

std::optional<RayHit> intersect_box(const sim::Box& box, const Vec3& o,
                                    const Vec3& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[a] - o[a]) / d[a];
    double t1 = (box.max[a] - o[a]) / d[a];
    // Entering through the min face means the outward normal points to -a.
    double entry_sign = -1.0;
    if (t0 > t1) {
      std::swap(t0, t1);
      entry_sign = 1.0;
    }
    if (t0 > t_near) {
      t_near = t0;
      axis = a;
      sign = entry_sign;
    }
    t_far = std::min(t_far, t1);
  }
  if (axis < 0 || t_near > t_far || t_near <= kMinT) return std::nullopt;
  RayHit hit;
  hit.t = t_near;
  hit.normal[axis] = sign;
  return hit;
}

std::optional<RayHit> intersect_cylinder(const sim::Cylinder& cyl,
                                         const Vec3& o, const Vec3& d) {
  std::optional<RayHit> best;
  auto consider = [&](double t, const Vec3& n) {
    if (t > kMinT && (!best || t < best->t)) best = RayHit{t, -1, n};
  };

  const double ox = o.x() - cyl.center.x();
  const double oy = o.y() - cyl.center.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 0.0) {
    const double b = 2.0 * (ox * d.x() + oy * d.y());
    const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      // Near root only: the far root is an exit.
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double z = o.z() + t * d.z();
      if (z >= cyl.z_min && z <= cyl.z_max) {
        Vec3 n{ox + t * d.x(), oy + t * d.y(), 0.0};
        consider(t, n / cyl.radius);
      }
    }
  }
  auto cap = [&](double z, double dir_sign) {
    // Only faces whose outward normal opposes the ray.
    if (d.z() * dir_sign >= 0.0) return;
    const double t = (z - o.z()) / d.z();
    const double x = ox + t * d.x();
    const double y = oy + t * d.y();
    if (x * x + y * y <= cyl.radius * cyl.radius) {
      consider(t, Vec3(0.0, 0.0, dir_sign));
    }
  };
  cap(cyl.z_max, 1.0);
  cap(cyl.z_min, -1.0);
  return best;
}

}  // namespace

std::optional<RayHit> intersect(const sim::Obstacle& obstacle,
                                const Vec3& origin, const Vec3& dir) {
  if (const auto* box = std::get_if<sim::Box>(&obstacle.shape)) {
    return intersect_box(*box, origin, dir);
  }
  return intersect_cylinder(std::get<sim::Cylinder>(obstacle.shape), origin,
                            dir);
}

std::optional<RayHit> cast_ray(const sim::Scene& scene, const Vec3& origin,
                               const Vec3& dir) {
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    auto hit = intersect(scene.obstacles[i], origin, dir);
    if (hit && (!best || hit->t < best->t)) {
      hit->obstacle = static_cast<int>(i);
      best = hit;
    }
  }
  return best;
}

Vec3 light_direction() { return Vec3(0.4, 0.3, 0.85).normalized(); }

EgoFrame render(const sim::Scene& scene, const Camera& camera) {
  const int w = camera.intrinsics.width;
  const int h = camera.intrinsics.height;
  EgoFrame frame;
  frame.width = w;
  frame.height = h;
  frame.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  frame.depth.assign(static_cast<std::size_t>(w) * h, 0.0f);
  const Vec3 light = light_direction();
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const std::size_t px = static_cast<std::size_t>(row) * w + col;
      const Vec3 dir = pixel_ray(camera, col + 0.5, row + 0.5);
      const auto hit = cast_ray(scene, camera.position, dir);
      float* rgb = &frame.rgb[3 * px];
      if (!hit) {
        std::copy(kBackground, kBackground + 3, rgb);
        continue;
      }
      frame.depth[px] = static_cast<float>(hit->t);
      const double lambert = std::max(0.0, hit->normal.dot(light));
      const Vec3 color =
          scene.obstacles[hit->obstacle].albedo * (0.35 + 0.65 * lambert);
      for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<float>(std::clamp(color[c], 0.0, 1.0));
      }
    }
  }
  return frame;
}

}  // namespace copilot::render
