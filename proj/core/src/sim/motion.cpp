// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/sim/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

namespace copilot::sim {

MotionPlan make_plan(Rng& rng, double fps, int steps,
                     const MotionParams& params) {
  if (fps <= 0.0) throw ContractViolation("make_plan: fps must be positive");
  MotionPlan plan;
  plan.fps = fps;
  plan.speed.reserve(steps);
  plan.heading_delta.reserve(steps);
  const double dt = 1.0 / fps;
  const double sqrt_dt = std::sqrt(dt);
  double speed = rng.uniform(params.min_speed, params.max_speed);
  double turn_rate =
      rng.uniform(-0.5 * params.max_turn_rate, 0.5 * params.max_turn_rate);
  for (int i = 0; i < steps; ++i) {
    speed = std::clamp(speed + params.speed_noise * sqrt_dt * rng.normal(),
                       params.min_speed, params.max_speed);
    turn_rate =
        std::clamp(turn_rate + params.turn_rate_noise * sqrt_dt * rng.normal(),
                   -params.max_turn_rate, params.max_turn_rate);
    plan.speed.push_back(speed);
    plan.heading_delta.push_back(turn_rate * dt);
  }
  return plan;
}

BodyState advance(const BodyModel& model, const BodyState& state,
                  double speed, double heading_delta, double yaw_adjust,
                  double fps) {
  const double yaw = state.root_yaw + heading_delta + yaw_adjust;
  const double step = speed / fps;
  Vec3 root = state.root_position;
  root.x() += step * std::cos(yaw);
  root.y() += step * std::sin(yaw);
  const double phase = std::fmod(
      state.gait_phase + 2.0 * std::numbers::pi * step / model.stride_length,
      2.0 * std::numbers::pi);
  return pose_body(model, root, yaw, phase);
}

BodyState sample_start(const Scene& scene, const BodyModel& model, Rng& rng,
                       const MotionParams& params) {
  const Bounds& b = scene.bounds;
  const double m = params.start_margin;
  if (b.width() <= 2.0 * m || b.depth() <= 2.0 * m) {
    throw PlacementError("scene '" + scene.scene_id +
                         "' is too small for the start margin");
  }
  for (int attempt = 0; attempt < params.start_attempts; ++attempt) {
    const Vec3 root{rng.uniform(b.min_x + m, b.max_x - m),
                    rng.uniform(b.min_y + m, b.max_y - m),
                    scene.floor_height + model.pelvis_height};
    const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    BodyState state = pose_body(model, root, yaw, phase);
    if (!check_collision(scene, model, state)) return state;
  }
  throw PlacementError("no collision-free start pose in scene '" +
                       scene.scene_id + "' after " +
                       std::to_string(params.start_attempts) + " attempts");
}

MotionSequence rollout(const Scene& scene, const BodyModel& model,
                       const BodyState& start, const MotionPlan& plan,
                       int max_frames) {
  if (max_frames < 1) throw ContractViolation("rollout: max_frames < 1");
  if (static_cast<int>(plan.speed.size()) < max_frames - 1 ||
      plan.heading_delta.size() != plan.speed.size()) {
    throw ContractViolation("rollout: plan shorter than max_frames - 1 steps");
  }
  if (check_collision(scene, model, start)) {
    throw ContractViolation("rollout: start pose is in collision");
  }
  MotionSequence seq;
  seq.fps = plan.fps;
  seq.states.reserve(max_frames);
  seq.states.push_back(start);
  while (seq.size() < max_frames) {
    const int f = seq.size() - 1;
    seq.states.push_back(advance(model, seq.states.back(), plan.speed[f],
                                 plan.heading_delta[f], 0.0, plan.fps));
    if (auto event = check_collision(scene, model, seq.states.back())) {
      event->timestep = seq.size() - 1;
      seq.terminal_event = std::move(event);
      break;
    }
  }
  return seq;
}

MotionSeed draw_motion(const Scene& scene, const BodyModel& model,
                       std::uint64_t seed, double fps, int max_frames,
                       const MotionParams& params) {
  if (fps <= 0.0) throw ContractViolation("sample_motion: fps must be positive");
  if (max_frames < 1) throw ContractViolation("sample_motion: max_frames < 1");
  Rng rng = Rng::derive(seed, scene.seed);
  MotionSeed out;
  out.start = sample_start(scene, model, rng, params);
  out.plan = make_plan(rng, fps, max_frames - 1, params);
  return out;
}

MotionSequence sample_motion(const Scene& scene, std::uint64_t seed,
                             double fps, int max_frames,
                             const MotionParams& params,
                             const BodyModel& model) {
  const MotionSeed m = draw_motion(scene, model, seed, fps, max_frames, params);
  return rollout(scene, model, m.start, m.plan, max_frames);
}

nlohmann::json motion_params_to_json(const MotionParams& p) {
  return {
      {"min_speed", p.min_speed},
      {"max_speed", p.max_speed},
      {"max_turn_rate", p.max_turn_rate},
      {"turn_rate_noise", p.turn_rate_noise},
      {"speed_noise", p.speed_noise},
      {"start_attempts", p.start_attempts},
      {"start_margin", p.start_margin},
  };
}

MotionParams motion_params_from_json(const nlohmann::json& doc) {
  MotionParams p;
  auto read = [&](const char* key, auto& field) {
    if (doc.contains(key)) doc.at(key).get_to(field);
  };
  read("min_speed", p.min_speed);
  read("max_speed", p.max_speed);
  read("max_turn_rate", p.max_turn_rate);
  read("turn_rate_noise", p.turn_rate_noise);
  read("speed_noise", p.speed_noise);
  read("start_attempts", p.start_attempts);
  read("start_margin", p.start_margin);
  return p;
}

}  // namespace copilot::sim
