// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

// copilot: data generation, training, evaluation, closed-loop control and
// visualization from one binary. Every flag can also be set through an
// environment variable named COPILOT_<FLAG> (e.g. COPILOT_LAMBDA_MAP);
// command-line values win over the environment, which wins over --config.

#include <cctype>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "copilot/common/error.hpp"

namespace {

using copilot::cli::Override;

std::string env_name(const std::string& flag) {
  std::string env = "COPILOT_";
  for (char c : flag.substr(2)) {
    env += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  }
  return env;
}

struct Command {
  CLI::App* app = nullptr;
  std::string config;
  std::vector<Override> overrides;

  /// `--flag` writes its value to `pointer` in the run configuration.
  template <typename T>
  CLI::Option* flag(const std::string& name, const std::string& pointer,
                    const std::string& help) {
    return app
        ->add_option_function<T>(
            name,
            [this, pointer](const T& v) {
              overrides.emplace_back(pointer, nlohmann::json(v));
            },
            help)
        ->envname(env_name(name));
  }
};

Command make_command(CLI::App& root, const std::string& name,
                     const std::string& description) {
  Command c;
  c.app = root.add_subcommand(name, description);
  c.app->add_option("--config", c.config, "JSON run configuration file")
      ->envname("COPILOT_CONFIG");
  c.flag<std::uint64_t>("--seed", "/seed", "global seed");
  c.flag<std::string>("--out", "/out", "output directory");
  return c;
}

void add_model_flags(Command& c) {
  c.flag<std::string>("--attention", "/model/attention",
                      "joint_stv, divided_stv, st_concat or single_view");
  c.flag<std::string>("--modality", "/model/modality", "rgb, depth or rgbd");
  c.flag<int>("--views", "/model/views", "number of camera views");
  c.flag<std::vector<int>>("--mounts", "/model/mounts", "camera mount per view");
  c.flag<int>("--frames", "/model/frames", "history length T");
  c.flag<int>("--image-size", "/model/image_size", "frame side in pixels");
  c.flag<int>("--patch", "/model/patch", "patch side in pixels");
  c.flag<int>("--dim", "/model/dim", "token dimension");
  c.flag<int>("--heads", "/model/heads", "attention heads");
  c.flag<int>("--depth", "/model/depth", "transformer blocks");
  c.flag<int>("--mlp-ratio", "/model/mlp_ratio", "MLP expansion ratio");
}

void add_train_flags(Command& c) {
  c.flag<double>("--lambda-map", "/train/lambda_map", "heatmap loss weight");
  c.flag<double>("--lambda-col", "/train/lambda_col", "collision loss weight");
  c.flag<double>("--lambda-joint", "/train/lambda_joint", "per-joint loss weight");
  c.flag<std::string>("--kl-direction", "/train/kl_direction",
                      "pred_first or target_first");
  c.flag<double>("--lr", "/train/learning_rate", "peak learning rate");
  c.flag<int>("--warmup-steps", "/train/warmup_steps", "linear warm-up steps");
  c.flag<double>("--weight-decay", "/train/weight_decay", "decoupled weight decay");
  c.flag<double>("--grad-clip", "/train/grad_clip", "global gradient-norm clip");
  c.flag<int>("--batch-size", "/train/batch_size", "windows per step");
  c.flag<int>("--epochs", "/train/epochs", "training epochs");
  c.flag<int>("--map-frames", "/train/map_frames",
              "supervised heatmap frames per positive window (0 = all)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"COPILOT collision prediction and avoidance toolkit"};
  app.require_subcommand(1);

  auto datagen = make_command(app, "datagen", "generate scenes, motion and shards");
  datagen.flag<int>("--workers", "/workers", "worker threads (0 = all cores)");
  datagen.flag<int>("--scenes", "/datagen/scenes", "number of scenes");
  datagen.flag<int>("--unseen-scenes", "/datagen/unseen_scenes",
                    "scenes held out for the unseen-scene split");
  datagen.flag<int>("--train-sequences", "/datagen/train_sequences",
                    "training sequences per training scene");
  datagen.flag<int>("--motion-eval-sequences", "/datagen/motion_eval_sequences",
                    "unseen-motion sequences per training scene");
  datagen.flag<int>("--unseen-sequences", "/datagen/unseen_sequences",
                    "sequences per held-out scene");
  datagen.flag<int>("--max-frames", "/datagen/max_frames", "longest sequence");
  datagen.flag<std::string>("--modality", "/datagen/data/modality",
                            "stored channels: rgb, depth or rgbd");
  datagen.flag<int>("--views", "/datagen/data/views", "cameras per window");
  datagen.flag<int>("--frames", "/datagen/data/frames", "history length T");
  datagen.flag<int>("--horizon", "/datagen/data/horizon", "prediction horizon H");
  datagen.flag<int>("--stride", "/datagen/data/stride", "window stride");

  auto train = make_command(app, "train", "train a model on generated shards");
  train.flag<std::string>("--data", "/data", "dataset directory");
  train.flag<std::string>("--train-split", "/train_split", "training split");
  train.flag<std::string>("--val-split", "/val_split",
                          "validation split for checkpoint selection");
  add_model_flags(train);
  add_train_flags(train);

  auto eval = make_command(app, "eval", "evaluate a checkpoint");
  eval.flag<std::string>("--data", "/data", "dataset directory");
  eval.flag<std::string>("--checkpoint", "/checkpoint", "checkpoint directory");
  eval.flag<std::vector<std::string>>("--splits", "/splits", "splits to evaluate");
  eval.flag<int>("--workers", "/workers", "inference threads (0 = all cores)");

  auto control = make_command(app, "control", "closed-loop avoidance rollouts");
  control.flag<std::string>("--data", "/data", "dataset directory");
  control.flag<std::string>("--checkpoint", "/checkpoint",
                            "single_view checkpoint for the learned policy");
  control.flag<std::string>("--policy", "/policy", "learned, noop or oracle");
  control.flag<std::string>("--split", "/split", "scene split");
  control.flag<int>("--episodes", "/episodes", "collision-bound episodes");
  control.flag<int>("--min-frame", "/min_frame",
                    "earliest uncontrolled collision frame");
  control.flag<int>("--oracle-lookahead", "/oracle_lookahead",
                    "frames the oracle simulates ahead");
  control.flag<int>("--workers", "/workers", "rollout threads (0 = all cores)");
  control.flag<double>("--threshold", "/control/threshold",
                       "collision probability trigger");
  control.flag<double>("--yaw-step", "/control/yaw_step_deg", "yaw step in degrees");
  control.flag<double>("--deadband", "/control/deadband",
                       "minimum left/right heatmap mass difference");
  control.flag<int>("--horizon", "/control/horizon",
                    "frames simulated past the uncontrolled collision");

  auto viz = make_command(app, "viz", "render heatmap overlays and trajectories");
  viz.flag<std::string>("--data", "/data", "dataset directory");
  viz.flag<std::string>("--split", "/split", "split holding the window");
  viz.flag<std::string>("--window", "/window", "window id to overlay");
  viz.flag<std::string>("--checkpoint", "/checkpoint",
                        "overlay predicted instead of annotated heatmaps");
  viz.flag<std::string>("--log", "/log", "episode log file or directory");
  viz.flag<std::string>("--scene", "/scene", "scene JSON for trajectory plots");
  viz.flag<int>("--scale", "/scale", "overlay upscaling factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (Command* c : {&datagen, &train, &eval, &control, &viz}) {
    if (!c->app->parsed()) continue;
    try {
      const auto rc = copilot::cli::resolve_run_config(c->app->get_name(),
                                                       c->config, c->overrides);
      copilot::cli::run_command(rc, std::cout);
      return 0;
    } catch (const copilot::ConfigError& e) {
      std::cerr << "copilot " << c->app->get_name() << ": config error: "
                << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "copilot " << c->app->get_name() << ": error: " << e.what()
                << "\n";
      return 1;
    }
  }
  return 1;
}
