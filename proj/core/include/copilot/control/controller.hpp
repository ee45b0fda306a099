// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/dataset/window.hpp"
#include "copilot/model/checkpoint.hpp"
#include "copilot/render/raycast.hpp"
#include "copilot/sim/motion.hpp"

namespace copilot::control {

enum class Action { kNone, kYawLeft, kYawRight };

std::string_view action_name(Action a);

struct ControlConfig {
  /// Trigger threshold on the predicted collision probability.
  double threshold = 0.5;
  double yaw_step_deg = 5.0;
  /// No action when |left - right| heatmap mass is below this.
  double deadband = 0.05;
  /// Frames an episode runs past the uncontrolled collision frame.
  int horizon = 10;
  /// Longest uncontrolled rollout considered when drawing episodes.
  int max_frames = 60;
  /// The policy is queried every this many frames.
  int replan_interval = 1;

  /// Throws ConfigError.
  void validate() const;
  /// Signed yaw change in radians (left is counter-clockwise, positive).
  double yaw_of(Action a) const;
};

nlohmann::json control_config_to_json(const ControlConfig& cfg);
ControlConfig control_config_from_json(const nlohmann::json& doc);

struct Decision {
  Action action = Action::kNone;
  double y_col = 0.0;
  double left_mass = 0.0;
  double right_mass = 0.0;
};

/// The triggering rule on already computed outputs: nothing below the
/// threshold; otherwise yaw away from the image half holding more heatmap
/// mass unless the halves differ by less than the deadband. `heatmap` is
/// row-major with `width` columns; columns < width / 2 are the left half.
Decision decide(double y_col, std::span<const double> heatmap, int width,
                const ControlConfig& cfg);

/// Everything a policy may look at before the step from `frame` to
/// `frame + 1`.
struct Observation {
  const sim::Scene& scene;
  const sim::BodyModel& body;
  const sim::BodyState& state;
  /// The most recent pelvis-camera frames, oldest first.
  const std::deque<render::EgoFrame>& history;
  const sim::MotionPlan& plan;
  int frame = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Decision act(const Observation& obs) const = 0;
};

class NoOpPolicy final : public Policy {
 public:
  std::string name() const override { return "noop"; }
  Decision act(const Observation&) const override { return {}; }
};

/// Runs a single_view model on the last T pelvis frames.
class LearnedPolicy final : public Policy {
 public:
  /// Throws ContractViolation unless the model is single_view.
  LearnedPolicy(const nn::Model& model, ControlConfig cfg);
  std::string name() const override { return "learned"; }
  Decision act(const Observation& obs) const override;
  const nn::Model& model() const { return model_; }

 private:
  const nn::Model& model_;
  ControlConfig cfg_;
};

/// Steers with ground-truth geometry: when the nominal continuation hits
/// something within `lookahead` frames it picks the yaw direction whose
/// continuation collides latest (or never).
class OraclePolicy final : public Policy {
 public:
  OraclePolicy(ControlConfig cfg, int lookahead);
  std::string name() const override { return "oracle"; }
  Decision act(const Observation& obs) const override;

 private:
  ControlConfig cfg_;
  int lookahead_;
};

/// Model inference on exactly T pelvis frames. Throws ContractViolation
/// on a wrong history length or a model that is not single_view.
Decision step_policy(const nn::Model& model,
                     std::span<const render::EgoFrame> history,
                     const ControlConfig& cfg);

/// Network input from rendered frames; RGB is quantized to 8 bits exactly
/// as dataset shards store it.
nn::Clip clip_from_frames(std::span<const render::EgoFrame> frames, int mount,
                          data::Modality modality);

/// A start state and nominal plan whose uncontrolled rollout collides.
struct Episode {
  std::string episode_id;
  std::string scene_id;
  std::uint64_t seed = 0;
  sim::BodyState start;
  sim::MotionPlan plan;
  /// Frame index of the uncontrolled collision.
  int collision_frame = 0;
};

nlohmann::json episode_to_json(const Episode& e);
Episode episode_from_json(const nlohmann::json& doc, const sim::BodyModel& body =
                                                         sim::BodyModel::standard());

/// Draws episodes round-robin over `scenes`, keeping candidates whose
/// uncontrolled rollout collides at a frame in [min_frame, cfg.max_frames).
/// Plans are long enough for the extra horizon. Throws ContractViolation
/// when `count` episodes cannot be found within 50 * count draws.
std::vector<Episode> build_episodes(std::span<const sim::Scene> scenes,
                                    int count, std::uint64_t seed,
                                    int min_frame, double fps,
                                    const ControlConfig& cfg,
                                    const sim::MotionParams& motion = {},
                                    const sim::BodyModel& body =
                                        sim::BodyModel::standard());

/// Replays an episode without control; true iff it collides at the
/// recorded frame.
bool verify_episode(const sim::Scene& scene, const Episode& e,
                    const sim::BodyModel& body = sim::BodyModel::standard());

struct StepLog {
  int frame = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Action action = Action::kNone;
  double y_col = 0.0;
  double left_mass = 0.0;
  double right_mass = 0.0;
  bool queried = false;
};

struct EpisodeOutcome {
  std::string episode_id;
  std::string policy;
  bool collided = false;
  /// Frames simulated after the start frame.
  int frames = 0;
  int interventions = 0;
  std::vector<StepLog> steps;
  /// Root pose of every frame including the start.
  std::vector<Eigen::Vector3d> trajectory;
  std::vector<double> yaws;
};

nlohmann::json step_log_to_json(const StepLog& s);

/// Closed loop: before every step the policy sees the latest pelvis frames,
/// its yaw is added to the nominal heading change, the body advances, and
/// the episode stops on collision or collision_frame + horizon frames.
EpisodeOutcome rollout_episode(const sim::Scene& scene, const Episode& e,
                               const Policy& policy, const ControlConfig& cfg,
                               const data::DatasetConfig& render_cfg,
                               int history_frames,
                               const sim::BodyModel& body =
                                   sim::BodyModel::standard());

struct AvoidanceReport {
  std::string policy;
  std::size_t episodes = 0;
  std::size_t avoided = 0;
  double rate = 0.0;
  std::vector<EpisodeOutcome> outcomes;
};

nlohmann::json avoidance_summary_to_json(const AvoidanceReport& r);

/// Runs every episode; `scenes` must contain each episode's scene id.
/// Episodes run in parallel when workers > 1. Throws ContractViolation on
/// an empty episode set.
AvoidanceReport evaluate_avoidance(std::span<const sim::Scene> scenes,
                                   std::span<const Episode> episodes,
                                   const Policy& policy,
                                   const ControlConfig& cfg,
                                   const data::DatasetConfig& render_cfg,
                                   int history_frames, int workers = 1);

}  // namespace copilot::control
