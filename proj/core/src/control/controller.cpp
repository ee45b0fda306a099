// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/control/controller.hpp"

#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "copilot/common/error.hpp"
#include "copilot/render/camera.hpp"
#include "copilot/sim/collision.hpp"

namespace copilot::control {

namespace {

constexpr int kPelvis = static_cast<int>(sim::Mount::kPelvis);

/// Frames until the first collision when following the plan from `frame`
/// with a constant extra yaw per step; `limit + 1` when none occurs.
int frames_to_collision(const sim::Scene& scene, const sim::BodyModel& body,
                        sim::BodyState state, const sim::MotionPlan& plan,
                        int frame, double yaw_per_step, int limit) {
  for (int k = 1; k <= limit; ++k) {
    const int f = frame + k - 1;
    if (f >= static_cast<int>(plan.speed.size())) break;
    state = sim::advance(body, state, plan.speed[f], plan.heading_delta[f],
                         yaw_per_step, plan.fps);
    if (sim::check_collision(scene, body, state)) return k;
  }
  return limit + 1;
}

render::EgoFrame render_pelvis(const sim::Scene& scene,
                               const sim::BodyModel& body,
                               const sim::BodyState& state,
                               const render::Intrinsics& intr, int frame) {
  const int mounts[] = {kPelvis};
  const auto cams = render::mount_cameras(state, body, mounts, intr);
  render::EgoFrame f = render::render(scene, cams[0]);
  f.frame_index = frame;
  return f;
}

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::kNone: return "none";
    case Action::kYawLeft: return "yaw_left";
    case Action::kYawRight: return "yaw_right";
  }
  return "?";
}

void ControlConfig::validate() const {
  std::vector<std::string> errs;
  if (!(threshold > 0.0 && threshold < 1.0)) {
    errs.push_back("threshold must be in (0, 1)");
  }
  if (!(yaw_step_deg > 0.0)) errs.push_back("yaw_step_deg must be > 0");
  if (deadband < 0.0) errs.push_back("deadband must be >= 0");
  if (horizon < 0) errs.push_back("horizon must be >= 0");
  if (max_frames < 2) errs.push_back("max_frames must be >= 2");
  if (replan_interval < 1) errs.push_back("replan_interval must be >= 1");
  if (!errs.empty()) {
    std::string msg = "invalid control config:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw ConfigError(msg);
  }
}

double ControlConfig::yaw_of(Action a) const {
  const double step = yaw_step_deg * std::numbers::pi / 180.0;
  switch (a) {
    case Action::kYawLeft: return step;
    case Action::kYawRight: return -step;
    case Action::kNone: break;
  }
  return 0.0;
}

nlohmann::json control_config_to_json(const ControlConfig& cfg) {
  return {{"threshold", cfg.threshold},   {"yaw_step_deg", cfg.yaw_step_deg},
          {"deadband", cfg.deadband},     {"horizon", cfg.horizon},
          {"max_frames", cfg.max_frames}, {"replan_interval", cfg.replan_interval}};
}

ControlConfig control_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("control config must be an object");
  const nlohmann::json known = control_config_to_json(ControlConfig{});
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown control config key '" + key + "'");
    }
  }
  ControlConfig cfg;
  try {
    cfg.threshold = doc.value("threshold", cfg.threshold);
    cfg.yaw_step_deg = doc.value("yaw_step_deg", cfg.yaw_step_deg);
    cfg.deadband = doc.value("deadband", cfg.deadband);
    cfg.horizon = doc.value("horizon", cfg.horizon);
    cfg.max_frames = doc.value("max_frames", cfg.max_frames);
    cfg.replan_interval = doc.value("replan_interval", cfg.replan_interval);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("control config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Decision decide(double y_col, std::span<const double> heatmap, int width,
                const ControlConfig& cfg) {
  Decision d;
  d.y_col = y_col;
  if (width <= 0 || heatmap.size() % static_cast<std::size_t>(width) != 0) {
    throw ContractViolation("decide: heatmap size is not a multiple of width");
  }
  for (std::size_t i = 0; i < heatmap.size(); ++i) {
    const auto col = static_cast<int>(i % static_cast<std::size_t>(width));
    (2 * col < width ? d.left_mass : d.right_mass) += heatmap[i];
  }
  if (y_col < cfg.threshold) return d;
  if (std::abs(d.left_mass - d.right_mass) < cfg.deadband) return d;
  d.action = d.left_mass > d.right_mass ? Action::kYawRight : Action::kYawLeft;
  return d;
}

nn::Clip clip_from_frames(std::span<const render::EgoFrame> frames, int mount,
                          data::Modality modality) {
  if (frames.empty()) throw ContractViolation("clip_from_frames: no frames");
  nn::Clip clip;
  clip.views = 1;
  clip.frames = static_cast<int>(frames.size());
  clip.channels = data::modality_channels(modality);
  clip.height = frames[0].height;
  clip.width = frames[0].width;
  clip.mounts = {mount};
  clip.data.resize(static_cast<std::size_t>(clip.frames) * clip.channels *
                   clip.height * clip.width);
  const bool rgb = data::has_rgb(modality);
  const bool depth = data::has_depth(modality);
  for (int t = 0; t < clip.frames; ++t) {
    const auto& f = frames[t];
    if (f.height != clip.height || f.width != clip.width) {
      throw ContractViolation("clip_from_frames: frame sizes differ");
    }
    for (int y = 0; y < clip.height; ++y) {
      for (int x = 0; x < clip.width; ++x) {
        const std::size_t px = static_cast<std::size_t>(y) * clip.width + x;
        int c = 0;
        if (rgb) {
          for (; c < 3; ++c) {
            const float q = std::round(f.rgb[px * 3 + c] * 255.0f);
            clip.data[clip.index(0, t, c, y, x)] = q / 255.0f;
          }
        }
        if (depth) {
          clip.data[clip.index(0, t, c, y, x)] =
              f.depth[px] / nn::kDepthNormalization;
        }
      }
    }
  }
  return clip;
}

Decision step_policy(const nn::Model& model,
                     std::span<const render::EgoFrame> history,
                     const ControlConfig& cfg) {
  const auto& mc = model.config();
  if (mc.attention != nn::AttentionMode::kSingleView) {
    throw ContractViolation("the controller needs a single_view model, got " +
                            std::string(nn::attention_mode_name(mc.attention)));
  }
  if (static_cast<int>(history.size()) != mc.frames) {
    throw ContractViolation("step_policy: history has " +
                            std::to_string(history.size()) +
                            " frames, model expects " +
                            std::to_string(mc.frames));
  }
  const nn::Clip clip = clip_from_frames(history, kPelvis, mc.modality);
  std::vector<char> want(history.size(), 0);
  want[history.size() - 1] = 1;
  const auto pred = model.forward(clip, want);
  const auto& map = pred.map(0, mc.frames - 1);
  const std::vector<double> heat(map.data(), map.data() + map.size());
  return decide(pred.y_col, heat, pred.width, cfg);
}

LearnedPolicy::LearnedPolicy(const nn::Model& model, ControlConfig cfg)
    : model_(model), cfg_(std::move(cfg)) {
  if (model.config().attention != nn::AttentionMode::kSingleView) {
    throw ContractViolation("the controller needs a single_view model");
  }
}

Decision LearnedPolicy::act(const Observation& obs) const {
  const auto t = static_cast<std::size_t>(model_.config().frames);
  if (obs.history.size() < t) return {};
  const std::vector<render::EgoFrame> frames(obs.history.end() - t,
                                             obs.history.end());
  return step_policy(model_, frames, cfg_);
}

OraclePolicy::OraclePolicy(ControlConfig cfg, int lookahead)
    : cfg_(std::move(cfg)), lookahead_(lookahead) {
  if (lookahead < 1) throw ContractViolation("oracle lookahead must be >= 1");
}

Decision OraclePolicy::act(const Observation& obs) const {
  Decision d;
  const int nominal = frames_to_collision(obs.scene, obs.body, obs.state,
                                          obs.plan, obs.frame, 0.0, lookahead_);
  if (nominal > lookahead_) return d;
  d.y_col = 1.0;
  const int left = frames_to_collision(obs.scene, obs.body, obs.state, obs.plan,
                                       obs.frame, cfg_.yaw_of(Action::kYawLeft),
                                       lookahead_);
  const int right = frames_to_collision(
      obs.scene, obs.body, obs.state, obs.plan, obs.frame,
      cfg_.yaw_of(Action::kYawRight), lookahead_);
  d.action = right > left ? Action::kYawRight : Action::kYawLeft;
  return d;
}

nlohmann::json episode_to_json(const Episode& e) {
  return {{"episode_id", e.episode_id},
          {"scene_id", e.scene_id},
          {"seed", e.seed},
          {"start",
           {{"position",
             {e.start.root_position.x(), e.start.root_position.y(),
              e.start.root_position.z()}},
            {"yaw", e.start.root_yaw},
            {"gait_phase", e.start.gait_phase}}},
          {"plan",
           {{"fps", e.plan.fps},
            {"speed", e.plan.speed},
            {"heading_delta", e.plan.heading_delta}}},
          {"collision_frame", e.collision_frame}};
}

Episode episode_from_json(const nlohmann::json& doc,
                          const sim::BodyModel& body) {
  Episode e;
  try {
    e.episode_id = doc.at("episode_id").get<std::string>();
    e.scene_id = doc.at("scene_id").get<std::string>();
    e.seed = doc.at("seed").get<std::uint64_t>();
    const auto& s = doc.at("start");
    const auto p = s.at("position").get<std::vector<double>>();
    if (p.size() != 3) throw ConfigError("episode start position needs 3 values");
    e.start = sim::pose_body(body, {p[0], p[1], p[2]},
                             s.at("yaw").get<double>(),
                             s.at("gait_phase").get<double>());
    const auto& plan = doc.at("plan");
    e.plan.fps = plan.at("fps").get<double>();
    e.plan.speed = plan.at("speed").get<std::vector<double>>();
    e.plan.heading_delta = plan.at("heading_delta").get<std::vector<double>>();
    e.collision_frame = doc.at("collision_frame").get<int>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("episode: ") + ex.what());
  }
  return e;
}

std::vector<Episode> build_episodes(std::span<const sim::Scene> scenes,
                                    int count, std::uint64_t seed,
                                    int min_frame, double fps,
                                    const ControlConfig& cfg,
                                    const sim::MotionParams& motion,
                                    const sim::BodyModel& body) {
  cfg.validate();
  if (scenes.empty() || count < 1) {
    throw ContractViolation("build_episodes needs scenes and count >= 1");
  }
  std::vector<Episode> out;
  const int plan_frames = cfg.max_frames + cfg.horizon;
  const std::int64_t max_draws = 50LL * count;
  for (std::int64_t k = 0; k < max_draws && static_cast<int>(out.size()) < count;
       ++k) {
    const auto& scene = scenes[static_cast<std::size_t>(k) % scenes.size()];
    const std::uint64_t s = Rng::derive(seed, static_cast<std::uint64_t>(k)).next_u64();
    sim::MotionSeed ms;
    try {
      ms = sim::draw_motion(scene, body, s, fps, plan_frames, motion);
    } catch (const sim::PlacementError&) {
      continue;
    }
    const auto seq = sim::rollout(scene, body, ms.start, ms.plan, cfg.max_frames);
    if (!seq.terminal_event) continue;
    const int c = seq.terminal_event->timestep;
    if (c < min_frame) continue;
    Episode e;
    e.episode_id = "episode_" + std::to_string(out.size());
    e.scene_id = scene.scene_id;
    e.seed = s;
    e.start = ms.start;
    e.plan = ms.plan;
    e.collision_frame = c;
    out.push_back(std::move(e));
  }
  if (static_cast<int>(out.size()) < count) {
    throw ContractViolation("found only " + std::to_string(out.size()) + " of " +
                            std::to_string(count) +
                            " collision-bound episodes");
  }
  return out;
}

bool verify_episode(const sim::Scene& scene, const Episode& e,
                    const sim::BodyModel& body) {
  const auto seq =
      sim::rollout(scene, body, e.start, e.plan, e.collision_frame + 1);
  return seq.terminal_event && seq.terminal_event->timestep == e.collision_frame;
}

nlohmann::json step_log_to_json(const StepLog& s) {
  return {{"frame", s.frame},
          {"position", {s.position.x(), s.position.y(), s.position.z()}},
          {"yaw", s.yaw},
          {"action", action_name(s.action)},
          {"queried", s.queried},
          {"y_col", s.y_col},
          {"left_mass", s.left_mass},
          {"right_mass", s.right_mass}};
}

EpisodeOutcome rollout_episode(const sim::Scene& scene, const Episode& e,
                               const Policy& policy, const ControlConfig& cfg,
                               const data::DatasetConfig& render_cfg,
                               int history_frames, const sim::BodyModel& body) {
  cfg.validate();
  if (history_frames < 1) throw ContractViolation("history_frames must be >= 1");
  const int last = e.collision_frame + cfg.horizon;
  if (static_cast<int>(e.plan.speed.size()) < last) {
    throw ContractViolation("episode " + e.episode_id +
                            ": plan too short for its horizon");
  }
  if (sim::check_collision(scene, body, e.start)) {
    throw ContractViolation("episode " + e.episode_id + " starts in collision");
  }
  EpisodeOutcome out;
  out.episode_id = e.episode_id;
  out.policy = policy.name();
  sim::BodyState state = e.start;
  out.trajectory.push_back(state.root_position);
  out.yaws.push_back(state.root_yaw);
  std::deque<render::EgoFrame> history;
  history.push_back(
      render_pelvis(scene, body, state, render_cfg.intrinsics, 0));
  for (int frame = 0; frame < last; ++frame) {
    StepLog log;
    log.frame = frame;
    log.position = state.root_position;
    log.yaw = state.root_yaw;
    Decision d;
    if (frame % cfg.replan_interval == 0) {
      log.queried = true;
      d = policy.act({scene, body, state, history, e.plan, frame});
    }
    log.action = d.action;
    log.y_col = d.y_col;
    log.left_mass = d.left_mass;
    log.right_mass = d.right_mass;
    if (d.action != Action::kNone) ++out.interventions;
    out.steps.push_back(log);

    state = sim::advance(body, state, e.plan.speed[frame],
                         e.plan.heading_delta[frame], cfg.yaw_of(d.action),
                         e.plan.fps);
    out.frames = frame + 1;
    out.trajectory.push_back(state.root_position);
    out.yaws.push_back(state.root_yaw);
    if (sim::check_collision(scene, body, state)) {
      out.collided = true;
      break;
    }
    history.push_back(
        render_pelvis(scene, body, state, render_cfg.intrinsics, frame + 1));
    while (static_cast<int>(history.size()) > history_frames) history.pop_front();
  }
  return out;
}

nlohmann::json avoidance_summary_to_json(const AvoidanceReport& r) {
  nlohmann::json episodes = nlohmann::json::array();
  for (const auto& o : r.outcomes) {
    episodes.push_back({{"episode_id", o.episode_id},
                        {"collided", o.collided},
                        {"frames", o.frames},
                        {"interventions", o.interventions}});
  }
  return {{"policy", r.policy},
          {"episodes", r.episodes},
          {"avoided", r.avoided},
          {"avoidance_rate", r.rate},
          {"outcomes", episodes}};
}

AvoidanceReport evaluate_avoidance(std::span<const sim::Scene> scenes,
                                   std::span<const Episode> episodes,
                                   const Policy& policy,
                                   const ControlConfig& cfg,
                                   const data::DatasetConfig& render_cfg,
                                   int history_frames, int workers) {
  if (episodes.empty()) {
    throw ContractViolation("evaluate_avoidance: empty episode set");
  }
  std::map<std::string, const sim::Scene*> by_id;
  for (const auto& s : scenes) by_id[s.scene_id] = &s;
  for (const auto& e : episodes) {
    if (!by_id.contains(e.scene_id)) {
      throw ContractViolation("episode " + e.episode_id + " refers to unknown " +
                              e.scene_id);
    }
  }
  AvoidanceReport report;
  report.policy = policy.name();
  report.episodes = episodes.size();
  report.outcomes.resize(episodes.size());
  const auto run = [&](std::size_t i) {
    report.outcomes[i] =
        rollout_episode(*by_id.at(episodes[i].scene_id), episodes[i], policy,
                        cfg, render_cfg, history_frames);
  };
  const std::size_t n_workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(workers, 1)), 1, episodes.size());
  if (n_workers == 1) {
    for (std::size_t i = 0; i < episodes.size(); ++i) run(i);
  } else {
    std::vector<std::exception_ptr> errors(n_workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t k = 0; k < n_workers; ++k) {
        pool.emplace_back([&, k] {
          try {
            for (std::size_t i = k; i < episodes.size(); i += n_workers) run(i);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (const auto& o : report.outcomes) report.avoided += !o.collided;
  report.rate = static_cast<double>(report.avoided) /
                static_cast<double>(report.episodes);
  return report;
}

}  // namespace copilot::control
