// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string_view>

#include <Eigen/Core>

namespace copilot::sim {

using Vec3 = Eigen::Vector3d;

/// Body joints in label order. The order is part of the dataset format.
enum class Joint : int {
  kHead = 0,
  kTorso,
  kLeftElbow,
  kRightElbow,
  kLeftHand,
  kRightHand,
  kLeftLeg,
  kRightLeg,
  kLeftFoot,
  kRightFoot,
};
inline constexpr int kNumJoints = 10;

/// Camera mount points in view order.
enum class Mount : int {
  kHead = 0,
  kPelvis,
  kLeftWrist,
  kRightWrist,
  kLeftKnee,
  kRightKnee,
};
inline constexpr int kNumMounts = 6;

std::string_view joint_name(int joint);
std::string_view mount_name(int mount);
/// Returns -1 for unknown names.
int mount_from_name(std::string_view name);

/// One collision sphere. `offset` is the neutral position relative to the
/// root in the body frame (x forward, y left, z up). Limbs swing along x by
/// `swing * sin(phase)`; feet rise by `|lift| * max(0, cos(phase))`, with a
/// negative `lift` selecting the opposite half cycle.
struct JointSpec {
  Vec3 offset;
  double radius = 0.0;
  double swing = 0.0;
  double lift = 0.0;
};

struct MountSpec {
  /// Joint the camera rides on; -1 means the root (pelvis).
  int joint = -1;
  /// Offset from the mount point, body frame.
  Vec3 offset;
  /// Pitch relative to the horizontal heading, degrees (negative = down).
  double pitch_deg = 0.0;
};

/// Simplified articulated body: ten spheres driven by a gait phase.
struct BodyModel {
  std::array<JointSpec, kNumJoints> joints;
  std::array<MountSpec, kNumMounts> mounts;
  /// Height of the root above the floor.
  double pelvis_height = 0.95;
  /// Distance covered per full gait cycle.
  double stride_length = 1.4;

  static const BodyModel& standard();
};

/// Articulated pose. `joints` is derived from the other fields by pose_body.
struct BodyState {
  Vec3 root_position = Vec3::Zero();
  double root_yaw = 0.0;
  double gait_phase = 0.0;
  std::array<Vec3, kNumJoints> joints{};
};

/// Forward kinematics.
BodyState pose_body(const BodyModel& model, const Vec3& root_position,
                    double root_yaw, double gait_phase);

/// Body-frame offset of `joint` at the given phase.
Vec3 joint_local_offset(const BodyModel& model, int joint, double gait_phase);

/// Rotates a body-frame vector into the world frame.
Vec3 body_to_world(double yaw, const Vec3& v);

}  // namespace copilot::sim
