// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "copilot/sim/body.hpp"

namespace copilot::render {

using Vec3 = Eigen::Vector3d;

/// Shared pinhole intrinsics. The model never sees them; they only define
/// how frames and heatmaps are produced.
struct Intrinsics {
  double vertical_fov_deg = 90.0;
  int width = 64;
  int height = 64;
};

/// Pinhole camera with an orthonormal (forward, right, up) frame. Pixel
/// (row, col) covers u in [col, col + 1), v in [row, row + 1); v grows
/// downward and the optical axis passes through (width / 2, height / 2).
struct Camera {
  Vec3 position = Vec3::Zero();
  Vec3 forward = Vec3::UnitX();
  Vec3 right = -Vec3::UnitY();
  Vec3 up = Vec3::UnitZ();
  Intrinsics intrinsics;
  /// Mount the camera rides on, or -1 for free cameras.
  int mount = -1;

  /// Focal length in pixels.
  double focal() const;

  /// Level camera turned by `yaw` about z and pitched by `pitch_deg`.
  static Camera from_yaw_pitch(const Vec3& position, double yaw,
                               double pitch_deg, const Intrinsics& intr = {});
};

struct PixelCoord {
  int row = 0;
  int col = 0;
  double u = 0.0;  // continuous column coordinate
  double v = 0.0;  // continuous row coordinate
};

/// Pinhole projection; nothing for points behind the camera or outside
/// the image.
std::optional<PixelCoord> project(const Vec3& point, const Camera& camera);

/// Ray direction through continuous image coordinates (u, v), scaled so its
/// component along `forward` is exactly 1; `t` along it is planar depth.
Vec3 pixel_ray(const Camera& camera, double u, double v);

/// 3D point seen at the center of pixel (row, col) at planar depth `depth`.
Vec3 back_project(const Camera& camera, int row, int col, double depth);

/// Canonical mount order: head, pelvis, left wrist, right wrist, left knee,
/// right knee.
std::vector<int> default_mounts(int views);

/// Cameras for the requested mounts (default: all six). Each sits at its
/// mount point plus the model's body-frame offset, faces the body heading,
/// and is pitched per mount (head level, pelvis -10 deg, knees -20 deg).
std::vector<Camera> mount_cameras(const sim::BodyState& state,
                                  const sim::BodyModel& model,
                                  std::span<const int> mounts,
                                  const Intrinsics& intr = {});
std::vector<Camera> mount_cameras(const sim::BodyState& state,
                                  const sim::BodyModel& model);

}  // namespace copilot::render
