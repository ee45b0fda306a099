// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "copilot/common/error.hpp"
#include "copilot/common/rng.hpp"
#include "copilot/dataset/window.hpp"
#include "copilot/model/checkpoint.hpp"
#include "copilot/train/loss.hpp"
#include "copilot/train/metrics.hpp"

namespace copilot::train {

struct TrainConfig {
  LossWeights weights;
  KlDirection kl_direction = KlDirection::kPredFirst;
  double learning_rate = 3e-4;
  /// Linear warm-up steps before the cosine decay starts.
  int warmup_steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double grad_clip = 1.0;
  int batch_size = 8;
  int epochs = 10;
  std::uint64_t seed = 0;
  /// Heatmap frames supervised per positive window and step, drawn at
  /// random from the valid ones; 0 supervises every valid frame.
  int map_frames = 0;

  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

/// Raised when a loss or gradient becomes non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

struct LossParts {
  double map = 0.0;
  double col = 0.0;
  double joint = 0.0;
  double total = 0.0;
  std::size_t map_frames = 0;
  std::size_t windows = 0;
};

nlohmann::json loss_parts_to_json(const LossParts& l);

/// Which stream frames carry heatmap supervision for `w`.
/// `view_index` maps stream views to window views. With `limit` > 0 at
/// most that many valid frames are drawn using `rng`.
std::vector<char> supervised_frames(const data::Window& w,
                                    std::span<const int> view_index,
                                    int frames, int limit, Rng* rng);

/// Losses of a batch and, when `accumulate` is set, their gradients added
/// into the model's parameter gradients. The map term is the mean over
/// every supervised frame in the batch; classification terms are batch
/// means. `want_maps[i]` selects the supervised frames of window i; pass
/// an empty vector to supervise every valid frame.
template <typename S>
LossParts batch_loss(nn::CopilotModel<S>& model,
                     std::span<const data::Window* const> batch,
                     const TrainConfig& cfg,
                     const std::vector<std::vector<char>>& want_maps,
                     bool accumulate);

/// Adam with decoupled weight decay over a fixed parameter list.
class Adam {
 public:
  Adam(nn::ParamRefs<float> params, const TrainConfig& cfg);
  void step(double lr);
  std::int64_t steps() const { return t_; }

 private:
  nn::ParamRefs<float> params_;
  std::vector<nn::Mat<float>> m_;
  std::vector<nn::Mat<float>> v_;
  double beta1_;
  double beta2_;
  double eps_;
  double weight_decay_;
  std::int64_t t_ = 0;
};

/// Warm-up followed by cosine decay to zero over `total` steps.
double learning_rate_at(const TrainConfig& cfg, std::int64_t step,
                        std::int64_t total);

/// Scales all gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_gradients(const nn::ParamRefs<float>& params, double max_norm);

struct EpochRecord {
  int epoch = 0;
  LossParts train;
  std::optional<LossParts> val;
  double learning_rate = 0.0;
  double seconds = 0.0;
  bool best = false;
};

nlohmann::json epoch_record_to_json(const EpochRecord& r);

struct TrainResult {
  /// Weights of the epoch with the lowest validation L_col + L_joint (the
  /// last epoch when there is no validation set).
  nn::Model model;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  /// Total training loss of every optimizer step.
  std::vector<double> step_losses;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Deterministic given the configs and data. Throws ContractViolation on
/// an empty training set and DivergenceError on a non-finite loss.
TrainResult train(const nn::ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const data::Window> train_set,
                  std::span<const data::Window> val_set,
                  const EpochCallback& on_epoch = {});

/// Mean losses over a set, supervising every valid heatmap frame.
LossParts evaluate_loss(const nn::Model& model,
                        std::span<const data::Window> windows,
                        const TrainConfig& cfg);

/// Inference over a set; `workers` > 1 splits the windows across threads.
std::vector<WindowPrediction> predict(const nn::Model& model,
                                      std::span<const data::Window> windows,
                                      int workers = 1);

/// predict() followed by compute_metrics(). Throws ContractViolation on an
/// empty split.
MetricsReport evaluate(const nn::Model& model,
                       std::span<const data::Window> windows,
                       const std::string& split, int workers = 1);

}  // namespace copilot::train
