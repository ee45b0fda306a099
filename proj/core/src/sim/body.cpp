// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/sim/body.hpp"

#include <algorithm>
#include <cmath>

namespace copilot::sim {
namespace {

constexpr std::string_view kJointNames[kNumJoints] = {
    "head",      "torso",      "left_elbow", "right_elbow", "left_hand",
    "right_hand", "left_leg",  "right_leg",  "left_foot",   "right_foot",
};

constexpr std::string_view kMountNames[kNumMounts] = {
    "head", "pelvis", "left_wrist", "right_wrist", "left_knee", "right_knee",
};

BodyModel make_standard() {
  BodyModel m;
  auto j = [&](Joint joint) -> JointSpec& {
    return m.joints[static_cast<int>(joint)];
  };
  // Neutral pose for a 1.8 m adult with the pelvis 0.95 m above the floor.
  j(Joint::kHead) = {{0.0, 0.0, 0.70}, 0.11, 0.0, 0.0};
  j(Joint::kTorso) = {{0.0, 0.0, 0.35}, 0.16, 0.0, 0.0};
  j(Joint::kLeftElbow) = {{0.0, 0.21, 0.22}, 0.05, 0.08, 0.0};
  j(Joint::kRightElbow) = {{0.0, -0.21, 0.22}, 0.05, -0.08, 0.0};
  j(Joint::kLeftHand) = {{0.0, 0.23, -0.05}, 0.05, 0.18, 0.0};
  j(Joint::kRightHand) = {{0.0, -0.23, -0.05}, 0.05, -0.18, 0.0};
  j(Joint::kLeftLeg) = {{0.0, 0.10, -0.45}, 0.07, -0.15, 0.0};
  j(Joint::kRightLeg) = {{0.0, -0.10, -0.45}, 0.07, 0.15, 0.0};
  // Foot centers sit one radius above the floor at zero lift.
  j(Joint::kLeftFoot) = {{0.0, 0.10, -0.88}, 0.07, -0.25, 0.06};
  j(Joint::kRightFoot) = {{0.0, -0.10, -0.88}, 0.07, 0.25, -0.06};

  auto mount = [&](Mount mt) -> MountSpec& {
    return m.mounts[static_cast<int>(mt)];
  };
  mount(Mount::kHead) = {static_cast<int>(Joint::kHead), {0.0, 0.0, 0.08}, 0.0};
  mount(Mount::kPelvis) = {-1, {0.12, 0.0, 0.0}, -10.0};
  mount(Mount::kLeftWrist) = {static_cast<int>(Joint::kLeftHand),
                              {0.0, 0.06, 0.0}, 0.0};
  mount(Mount::kRightWrist) = {static_cast<int>(Joint::kRightHand),
                               {0.0, -0.06, 0.0}, 0.0};
  mount(Mount::kLeftKnee) = {static_cast<int>(Joint::kLeftLeg),
                             {0.09, 0.0, 0.0}, -20.0};
  mount(Mount::kRightKnee) = {static_cast<int>(Joint::kRightLeg),
                              {0.09, 0.0, 0.0}, -20.0};
  return m;
}

}  // namespace

std::string_view joint_name(int joint) {
  return joint >= 0 && joint < kNumJoints ? kJointNames[joint] : "unknown";
}

std::string_view mount_name(int mount) {
  return mount >= 0 && mount < kNumMounts ? kMountNames[mount] : "unknown";
}

int mount_from_name(std::string_view name) {
  for (int i = 0; i < kNumMounts; ++i) {
    if (kMountNames[i] == name) return i;
  }
  return -1;
}

const BodyModel& BodyModel::standard() {
  static const BodyModel model = make_standard();
  return model;
}

Vec3 body_to_world(double yaw, const Vec3& v) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

Vec3 joint_local_offset(const BodyModel& model, int joint, double gait_phase) {
  const JointSpec& spec = model.joints[joint];
  Vec3 offset = spec.offset;
  offset.x() += spec.swing * std::sin(gait_phase);
  if (spec.lift != 0.0) {
    const double c = spec.lift > 0.0 ? std::cos(gait_phase)
                                     : -std::cos(gait_phase);
    offset.z() += std::abs(spec.lift) * std::max(0.0, c);
  }
  return offset;
}

BodyState pose_body(const BodyModel& model, const Vec3& root_position,
                    double root_yaw, double gait_phase) {
  BodyState state;
  state.root_position = root_position;
  state.root_yaw = root_yaw;
  state.gait_phase = gait_phase;
  for (int j = 0; j < kNumJoints; ++j) {
    state.joints[j] =
        root_position +
        body_to_world(root_yaw, joint_local_offset(model, j, gait_phase));
  }
  return state;
}

}  // namespace copilot::sim
