// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/render/camera.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "copilot/common/error.hpp"

namespace copilot::render {

double Camera::focal() const {
  const double half_fov =
      0.5 * intrinsics.vertical_fov_deg * std::numbers::pi / 180.0;
  return 0.5 * intrinsics.height / std::tan(half_fov);
}

Camera Camera::from_yaw_pitch(const Vec3& position, double yaw,
                              double pitch_deg, const Intrinsics& intr) {
  if (!(intr.vertical_fov_deg > 0.0 && intr.vertical_fov_deg < 180.0)) {
    throw ContractViolation("camera vertical_fov must lie in (0, 180)");
  }
  if (intr.width <= 0 || intr.height <= 0) {
    throw ContractViolation("camera resolution must be positive");
  }
  const double pitch = pitch_deg * std::numbers::pi / 180.0;
  Camera cam;
  cam.position = position;
  cam.intrinsics = intr;
  cam.forward = {std::cos(pitch) * std::cos(yaw),
                 std::cos(pitch) * std::sin(yaw), std::sin(pitch)};
  cam.right = {std::sin(yaw), -std::cos(yaw), 0.0};
  cam.up = cam.right.cross(cam.forward);
  return cam;
}

std::optional<PixelCoord> project(const Vec3& point, const Camera& camera) {
  const Vec3 rel = point - camera.position;
  const double z = rel.dot(camera.forward);
  if (z <= 0.0) return std::nullopt;
  const double f = camera.focal();
  const auto& in = camera.intrinsics;
  const double u = 0.5 * in.width + f * rel.dot(camera.right) / z;
  const double v = 0.5 * in.height - f * rel.dot(camera.up) / z;
  if (!(u >= 0.0 && u < in.width && v >= 0.0 && v < in.height)) {
    return std::nullopt;
  }
  return PixelCoord{static_cast<int>(std::floor(v)),
                    static_cast<int>(std::floor(u)), u, v};
}

Vec3 pixel_ray(const Camera& camera, double u, double v) {
  const double f = camera.focal();
  const auto& in = camera.intrinsics;
  return camera.forward + ((u - 0.5 * in.width) / f) * camera.right -
         ((v - 0.5 * in.height) / f) * camera.up;
}

Vec3 back_project(const Camera& camera, int row, int col, double depth) {
  return camera.position + depth * pixel_ray(camera, col + 0.5, row + 0.5);
}

std::vector<int> default_mounts(int views) {
  if (views < 1 || views > sim::kNumMounts) {
    throw ConfigError("view count must lie in [1, 6], got " +
                      std::to_string(views));
  }
  std::vector<int> mounts(views);
  for (int i = 0; i < views; ++i) mounts[i] = i;
  return mounts;
}

std::vector<Camera> mount_cameras(const sim::BodyState& state,
                                  const sim::BodyModel& model,
                                  std::span<const int> mounts,
                                  const Intrinsics& intr) {
  if (mounts.size() > static_cast<std::size_t>(sim::kNumMounts)) {
    throw ContractViolation("at most 6 camera mounts");
  }
  std::vector<Camera> cameras;
  cameras.reserve(mounts.size());
  for (int m : mounts) {
    if (m < 0 || m >= sim::kNumMounts) {
      throw ContractViolation("unknown camera mount " + std::to_string(m));
    }
    const sim::MountSpec& spec = model.mounts[m];
    const Vec3 anchor =
        spec.joint < 0 ? state.root_position : state.joints[spec.joint];
    const Vec3 position =
        anchor + sim::body_to_world(state.root_yaw, spec.offset);
    Camera cam =
        Camera::from_yaw_pitch(position, state.root_yaw, spec.pitch_deg, intr);
    cam.mount = m;
    cameras.push_back(cam);
  }
  return cameras;
}

std::vector<Camera> mount_cameras(const sim::BodyState& state,
                                  const sim::BodyModel& model) {
  const auto mounts = default_mounts(sim::kNumMounts);
  return mount_cameras(state, model, mounts);
}

}  // namespace copilot::render
