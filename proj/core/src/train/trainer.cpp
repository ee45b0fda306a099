// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "copilot/sim/body.hpp"

namespace copilot::train {

namespace {

std::vector<int> stream_index(const nn::ModelConfig& cfg,
                              const data::Window& w) {
  std::vector<int> idx;
  if (cfg.attention == nn::AttentionMode::kSingleView) {
    for (int v = 0; v < w.views; ++v) {
      if (w.mounts[v] == static_cast<int>(sim::Mount::kPelvis)) idx.push_back(v);
    }
    if (idx.empty()) {
      throw ContractViolation("window " + w.window_id +
                              " has no pelvis camera for a single_view model");
    }
    idx.resize(1);
    return idx;
  }
  for (int v = 0; v < w.views; ++v) idx.push_back(v);
  return idx;
}

template <typename S>
LossParts batch_loss_impl(const nn::CopilotModel<S>& model,
                          std::span<const data::Window* const> batch,
                          const TrainConfig& cfg,
                          const std::vector<std::vector<char>>& want_maps,
                          nn::CopilotModel<S>* grads_into) {
  const auto& mcfg = model.config();
  const int frames = mcfg.frames;
  const double b = static_cast<double>(batch.size());
  const bool use_maps = cfg.weights.map > 0.0;

  std::vector<std::vector<char>> want(batch.size());
  std::size_t map_total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto idx = stream_index(mcfg, *batch[i]);
    if (!use_maps) {
      want[i].assign(idx.size() * frames, 0);
    } else if (want_maps.empty()) {
      want[i] = supervised_frames(*batch[i], idx, frames, 0, nullptr);
    } else {
      want[i] = want_maps.at(i);
    }
    for (char c : want[i]) map_total += c != 0;
  }

  LossParts parts;
  parts.windows = batch.size();
  parts.map_frames = map_total;
  double map_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const data::Window& w = *batch[i];
    const nn::Clip clip = nn::make_clip(w, mcfg.modality);
    typename nn::CopilotModel<S>::TrainState state;
    const auto pred = model.forward_train(clip, want[i], state);

    nn::OutputGrads<S> g;
    const double y_col = w.y_col ? 1.0 : 0.0;
    parts.col += bce(pred.y_col, y_col) / b;
    g.d_col = static_cast<S>(cfg.weights.col * bce_grad(pred.y_col, y_col) / b);
    g.d_joint.resize(mcfg.joints);
    for (int j = 0; j < mcfg.joints; ++j) {
      const double y = w.y_joint[j] ? 1.0 : 0.0;
      parts.joint += bce(pred.y_joint[j], y) / b;
      g.d_joint[j] =
          static_cast<S>(cfg.weights.joint * bce_grad(pred.y_joint[j], y) / b);
    }
    g.d_maps.assign(pred.maps.size(), nn::ColVec<S>());
    for (std::size_t f = 0; f < want[i].size(); ++f) {
      if (!want[i][f]) continue;
      const int v = pred.view_index[f / frames];
      const int t = static_cast<int>(f % frames);
      const auto off = w.map_offset(v, t);
      if (off < 0) {
        throw ContractViolation("window " + w.window_id +
                                ": supervised frame has no heatmap");
      }
      const std::span<const float> target(w.y_map.data() + off, w.pixels());
      const auto& p = pred.maps[f];
      map_sum += kl_frame<S, float>({p.data(), static_cast<std::size_t>(p.size())},
                                    target, cfg.kl_direction);
      g.d_maps[f] = kl_frame_grad<S, float>(
          p, target, cfg.kl_direction,
          cfg.weights.map / static_cast<double>(map_total));
    }
    if (grads_into != nullptr) grads_into->backward(state, g);
  }
  parts.map = map_total > 0 ? map_sum / static_cast<double>(map_total) : 0.0;
  parts.total = total_loss(cfg.weights, parts.map, parts.col, parts.joint);
  return parts;
}

void accumulate(LossParts& sum, const LossParts& batch) {
  sum.col += batch.col * static_cast<double>(batch.windows);
  sum.joint += batch.joint * static_cast<double>(batch.windows);
  sum.map += batch.map * static_cast<double>(batch.map_frames);
  sum.windows += batch.windows;
  sum.map_frames += batch.map_frames;
}

LossParts finish(LossParts sum, const LossWeights& w) {
  if (sum.windows > 0) {
    sum.col /= static_cast<double>(sum.windows);
    sum.joint /= static_cast<double>(sum.windows);
  }
  if (sum.map_frames > 0) sum.map /= static_cast<double>(sum.map_frames);
  sum.total = total_loss(w, sum.map, sum.col, sum.joint);
  return sum;
}

}  // namespace

void TrainConfig::validate() const {
  std::vector<std::string> errs;
  if (weights.map < 0 || weights.col < 0 || weights.joint < 0) {
    errs.push_back("loss weights must be >= 0");
  }
  if (!(learning_rate > 0)) errs.push_back("learning_rate must be > 0");
  if (warmup_steps < 0) errs.push_back("warmup_steps must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    errs.push_back("Adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0)) errs.push_back("adam_epsilon must be > 0");
  if (weight_decay < 0) errs.push_back("weight_decay must be >= 0");
  if (batch_size < 1) errs.push_back("batch_size must be >= 1");
  if (epochs < 1) errs.push_back("epochs must be >= 1");
  if (map_frames < 0) errs.push_back("map_frames must be >= 0");
  if (!errs.empty()) {
    std::string msg = "invalid train config:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw ConfigError(msg);
  }
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {
      {"lambda_map", cfg.weights.map},
      {"lambda_col", cfg.weights.col},
      {"lambda_joint", cfg.weights.joint},
      {"kl_direction", kl_direction_name(cfg.kl_direction)},
      {"learning_rate", cfg.learning_rate},
      {"warmup_steps", cfg.warmup_steps},
      {"beta1", cfg.beta1},
      {"beta2", cfg.beta2},
      {"adam_epsilon", cfg.adam_epsilon},
      {"weight_decay", cfg.weight_decay},
      {"grad_clip", cfg.grad_clip},
      {"batch_size", cfg.batch_size},
      {"epochs", cfg.epochs},
      {"seed", cfg.seed},
      {"map_frames", cfg.map_frames},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("train config must be an object");
  const nlohmann::json known = train_config_to_json(TrainConfig{});
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown train config key '" + key + "'");
    }
  }
  TrainConfig cfg;
  try {
    cfg.weights.map = doc.value("lambda_map", cfg.weights.map);
    cfg.weights.col = doc.value("lambda_col", cfg.weights.col);
    cfg.weights.joint = doc.value("lambda_joint", cfg.weights.joint);
    if (doc.contains("kl_direction")) {
      cfg.kl_direction =
          kl_direction_from_name(doc.at("kl_direction").get<std::string>());
    }
    cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
    cfg.warmup_steps = doc.value("warmup_steps", cfg.warmup_steps);
    cfg.beta1 = doc.value("beta1", cfg.beta1);
    cfg.beta2 = doc.value("beta2", cfg.beta2);
    cfg.adam_epsilon = doc.value("adam_epsilon", cfg.adam_epsilon);
    cfg.weight_decay = doc.value("weight_decay", cfg.weight_decay);
    cfg.grad_clip = doc.value("grad_clip", cfg.grad_clip);
    cfg.batch_size = doc.value("batch_size", cfg.batch_size);
    cfg.epochs = doc.value("epochs", cfg.epochs);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.map_frames = doc.value("map_frames", cfg.map_frames);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json loss_parts_to_json(const LossParts& l) {
  return {{"map", l.map},         {"col", l.col},
          {"joint", l.joint},     {"total", l.total},
          {"windows", l.windows}, {"map_frames", l.map_frames}};
}

nlohmann::json epoch_record_to_json(const EpochRecord& r) {
  nlohmann::json doc = {{"epoch", r.epoch},
                        {"train", loss_parts_to_json(r.train)},
                        {"learning_rate", r.learning_rate},
                        {"seconds", r.seconds},
                        {"best", r.best}};
  doc["val"] = r.val ? loss_parts_to_json(*r.val) : nlohmann::json();
  return doc;
}

std::vector<char> supervised_frames(const data::Window& w,
                                    std::span<const int> view_index,
                                    int frames, int limit, Rng* rng) {
  std::vector<char> want(view_index.size() * frames, 0);
  if (!w.y_col) return want;
  std::vector<std::size_t> valid;
  for (std::size_t vi = 0; vi < view_index.size(); ++vi) {
    for (int t = 0; t < frames; ++t) {
      if (w.map_is_valid(view_index[vi], t)) valid.push_back(vi * frames + t);
    }
  }
  if (limit > 0 && valid.size() > static_cast<std::size_t>(limit)) {
    if (rng == nullptr) {
      throw ContractViolation("supervised_frames: sampling needs an rng");
    }
    for (int k = 0; k < limit; ++k) {
      const auto j = static_cast<std::size_t>(
          rng->uniform_int(k, static_cast<std::int64_t>(valid.size()) - 1));
      std::swap(valid[k], valid[j]);
    }
    valid.resize(limit);
  }
  for (auto f : valid) want[f] = 1;
  return want;
}

template <typename S>
LossParts batch_loss(nn::CopilotModel<S>& model,
                     std::span<const data::Window* const> batch,
                     const TrainConfig& cfg,
                     const std::vector<std::vector<char>>& want_maps,
                     bool accumulate) {
  return batch_loss_impl<S>(model, batch, cfg, want_maps,
                            accumulate ? &model : nullptr);
}

template LossParts batch_loss<float>(nn::CopilotModel<float>&,
                                     std::span<const data::Window* const>,
                                     const TrainConfig&,
                                     const std::vector<std::vector<char>>&,
                                     bool);
template LossParts batch_loss<double>(nn::CopilotModel<double>&,
                                      std::span<const data::Window* const>,
                                      const TrainConfig&,
                                      const std::vector<std::vector<char>>&,
                                      bool);

Adam::Adam(nn::ParamRefs<float> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_epsilon),
      weight_decay_(cfg.weight_decay) {
  for (const auto* p : params_) {
    m_.push_back(nn::Mat<float>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(nn::Mat<float>::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto b1 = static_cast<float>(beta1_);
  const auto b2 = static_cast<float>(beta2_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    m_[i] = b1 * m_[i] + (1.0f - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0f - b2) * p.grad.cwiseProduct(p.grad);
    const auto mhat = m_[i].array() / static_cast<float>(c1);
    const auto vhat = v_[i].array() / static_cast<float>(c2);
    p.value.array() -= static_cast<float>(lr) *
                       (mhat / (vhat.sqrt() + static_cast<float>(eps_)) +
                        static_cast<float>(weight_decay_) * p.value.array());
  }
}

double learning_rate_at(const TrainConfig& cfg, std::int64_t step,
                        std::int64_t total) {
  if (step < cfg.warmup_steps) {
    return cfg.learning_rate * static_cast<double>(step + 1) /
           static_cast<double>(cfg.warmup_steps);
  }
  const double span = static_cast<double>(std::max<std::int64_t>(
      1, total - cfg.warmup_steps));
  const double progress =
      std::min(1.0, static_cast<double>(step - cfg.warmup_steps) / span);
  return 0.5 * cfg.learning_rate * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_gradients(const nn::ParamRefs<float>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto scale = static_cast<float>(max_norm / norm);
    for (auto* p : params) p->grad *= scale;
  }
  return norm;
}

TrainResult train(const nn::ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const data::Window> train_set,
                  std::span<const data::Window> val_set,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) {
    throw ContractViolation("training set is empty");
  }
  nn::Model model(model_cfg);
  Adam adam(model.parameters(), cfg);
  Rng rng = Rng::derive(cfg.seed, 0x747261696eULL);

  const std::size_t n = train_set.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const std::int64_t steps_per_epoch =
      static_cast<std::int64_t>((n + bs - 1) / bs);
  const std::int64_t total_steps = steps_per_epoch * cfg.epochs;

  TrainResult result{model, 0, {}, {}};
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    LossParts sum;
    for (std::size_t start = 0; start < n; start += bs) {
      std::vector<const data::Window*> batch;
      std::vector<std::vector<char>> want;
      for (std::size_t k = start; k < std::min(n, start + bs); ++k) {
        const data::Window& w = train_set[order[k]];
        batch.push_back(&w);
        want.push_back(supervised_frames(w, stream_index(model_cfg, w),
                                         model_cfg.frames, cfg.map_frames,
                                         &rng));
      }
      model.zero_grad();
      const LossParts parts = batch_loss<float>(model, batch, cfg, want, true);
      const double grad_norm = clip_gradients(model.parameters(), cfg.grad_clip);
      if (!std::isfinite(parts.total) || !std::isfinite(grad_norm)) {
        std::string ids;
        for (const auto* w : batch) ids += " " + w->window_id;
        throw DivergenceError(
            "training diverged at epoch " + std::to_string(epoch) + ", step " +
            std::to_string(step) + ": loss " + std::to_string(parts.total) +
            " (map " + std::to_string(parts.map) + ", col " +
            std::to_string(parts.col) + ", joint " +
            std::to_string(parts.joint) + "), gradient norm " +
            std::to_string(grad_norm) + "; batch:" + ids);
      }
      rec.learning_rate = learning_rate_at(cfg, step, total_steps);
      adam.step(rec.learning_rate);
      ++step;
      result.step_losses.push_back(parts.total);
      accumulate(sum, parts);
    }
    rec.train = finish(sum, cfg.weights);
    if (!val_set.empty()) {
      rec.val = evaluate_loss(model, val_set, cfg);
      const double score = rec.val->col + rec.val->joint;
      if (score < best) {
        best = score;
        rec.best = true;
      }
    } else {
      rec.best = epoch == cfg.epochs;
    }
    if (rec.best) {
      result.model = model;
      result.best_epoch = epoch;
    }
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

LossParts evaluate_loss(const nn::Model& model,
                        std::span<const data::Window> windows,
                        const TrainConfig& cfg) {
  LossParts sum;
  constexpr std::size_t kChunk = 16;
  for (std::size_t start = 0; start < windows.size(); start += kChunk) {
    std::vector<const data::Window*> batch;
    for (std::size_t k = start; k < std::min(windows.size(), start + kChunk);
         ++k) {
      batch.push_back(&windows[k]);
    }
    accumulate(sum, batch_loss_impl<float>(model, batch, cfg, {}, nullptr));
  }
  return finish(sum, cfg.weights);
}

std::vector<WindowPrediction> predict(const nn::Model& model,
                                      std::span<const data::Window> windows,
                                      int workers) {
  std::vector<WindowPrediction> out(windows.size());
  const auto run = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& w = windows[i];
      const auto pred =
          model.forward(nn::make_clip(w, model.config().modality), false);
      auto& p = out[i];
      p.window_id = w.window_id;
      p.col_prob = pred.y_col;
      p.joint_prob.assign(pred.y_joint.begin(), pred.y_joint.end());
      p.col_true = w.y_col;
      p.joint_true = w.y_joint;
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)),
                               windows.size()));
  if (n_workers == 1) {
    run(0, windows.size());
    return out;
  }
  std::vector<std::exception_ptr> errors(n_workers);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (windows.size() + n_workers - 1) / n_workers;
    for (std::size_t k = 0; k < n_workers; ++k) {
      pool.emplace_back([&, k] {
        try {
          run(k * chunk, std::min(windows.size(), (k + 1) * chunk));
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

MetricsReport evaluate(const nn::Model& model,
                       std::span<const data::Window> windows,
                       const std::string& split, int workers) {
  if (windows.empty()) {
    throw ContractViolation("cannot evaluate empty split '" + split + "'");
  }
  const auto preds = predict(model, windows, workers);
  return compute_metrics(preds, split);
}

}  // namespace copilot::train
