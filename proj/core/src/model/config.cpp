// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/model/config.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include <nlohmann/json.hpp>

#include "copilot/common/error.hpp"
#include "copilot/render/camera.hpp"
#include "copilot/sim/body.hpp"

namespace copilot::nn {

std::string_view attention_mode_name(AttentionMode m) {
  switch (m) {
    case AttentionMode::kJointStv: return "joint_stv";
    case AttentionMode::kDividedStv: return "divided_stv";
    case AttentionMode::kStConcat: return "st_concat";
    case AttentionMode::kSingleView: return "single_view";
  }
  return "?";
}

AttentionMode attention_mode_from_name(std::string_view name) {
  if (name == "joint_stv") return AttentionMode::kJointStv;
  if (name == "divided_stv") return AttentionMode::kDividedStv;
  if (name == "st_concat") return AttentionMode::kStConcat;
  if (name == "single_view") return AttentionMode::kSingleView;
  throw ConfigError("unknown attention mode '" + std::string(name) + "'");
}

int ModelConfig::upsample_stages() const {
  return patch > 0 ? std::countr_zero(static_cast<unsigned>(patch)) : 0;
}

int ModelConfig::stream_views() const {
  return attention == AttentionMode::kSingleView ? 1 : views;
}

std::vector<int> ModelConfig::resolved_mounts() const {
  return mounts.empty() ? render::default_mounts(views) : mounts;
}

std::vector<int> ModelConfig::stream_mounts() const {
  if (attention == AttentionMode::kSingleView) {
    return {static_cast<int>(sim::Mount::kPelvis)};
  }
  return resolved_mounts();
}

void ModelConfig::validate() const {
  std::vector<std::string> errs;
  if (views < 1 || views > sim::kNumMounts) {
    errs.push_back("views must be in [1, 6]");
  }
  if (!mounts.empty()) {
    if (static_cast<int>(mounts.size()) != views) {
      errs.push_back("mounts must list one mount per view");
    }
    for (int m : mounts) {
      if (m < 0 || m >= sim::kNumMounts) {
        errs.push_back("unknown mount " + std::to_string(m));
      }
    }
  }
  if (attention == AttentionMode::kSingleView && views >= 1 &&
      views <= sim::kNumMounts) {
    const auto ms = resolved_mounts();
    if (std::find(ms.begin(), ms.end(), static_cast<int>(sim::Mount::kPelvis)) ==
        ms.end()) {
      errs.push_back("single_view needs the pelvis among its mounts");
    }
  }
  if (frames < 1) errs.push_back("frames must be positive");
  if (patch < 2 || !std::has_single_bit(static_cast<unsigned>(patch))) {
    errs.push_back("patch must be a power of two >= 2");
  } else if (image_size <= 0 || image_size % patch != 0) {
    errs.push_back("image_size must be a positive multiple of patch");
  }
  if (dim < 1) errs.push_back("dim must be positive");
  if (heads < 1 || (dim > 0 && dim % heads != 0)) {
    errs.push_back("dim must be divisible by heads");
  }
  if (patch >= 2 && dim > 0 && (dim % (1 << upsample_stages()) != 0)) {
    errs.push_back("dim " + std::to_string(dim) +
                   " is not divisible by 2^" +
                   std::to_string(upsample_stages()) +
                   " (heatmap head halves channels per stage)");
  }
  if (depth < 1) errs.push_back("depth must be positive");
  if (mlp_ratio < 1) errs.push_back("mlp_ratio must be positive");
  if (joints < 1) errs.push_back("joints must be positive");
  if (!errs.empty()) {
    std::string msg = "invalid model config:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw ConfigError(msg);
  }
}

ModelConfig ModelConfig::full_scale() {
  ModelConfig cfg;
  cfg.views = 6;
  cfg.frames = 30;
  cfg.image_size = 224;
  cfg.patch = 16;
  cfg.dim = 768;
  cfg.heads = 12;
  cfg.depth = 12;
  cfg.modality = data::Modality::kRgb;
  return cfg;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.views = 2;
  cfg.frames = 2;
  cfg.image_size = 8;
  cfg.patch = 4;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.depth = 1;
  cfg.mlp_ratio = 2;
  return cfg;
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {
      {"views", cfg.views},
      {"mounts", cfg.resolved_mounts()},
      {"frames", cfg.frames},
      {"image_size", cfg.image_size},
      {"patch", cfg.patch},
      {"dim", cfg.dim},
      {"heads", cfg.heads},
      {"depth", cfg.depth},
      {"mlp_ratio", cfg.mlp_ratio},
      {"joints", cfg.joints},
      {"attention", attention_mode_name(cfg.attention)},
      {"modality", data::modality_name(cfg.modality)},
      {"init_seed", cfg.init_seed},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("model config must be an object");
  static const char* kKeys[] = {"views",     "mounts",   "frames", "image_size",
                                "patch",     "dim",      "heads",  "depth",
                                "mlp_ratio", "joints",   "attention",
                                "modality",  "init_seed"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }) ==
        std::end(kKeys)) {
      throw ConfigError("unknown model config key '" + key + "'");
    }
  }
  ModelConfig cfg;
  try {
    cfg.views = doc.value("views", cfg.views);
    cfg.mounts = doc.value("mounts", cfg.mounts);
    cfg.frames = doc.value("frames", cfg.frames);
    cfg.image_size = doc.value("image_size", cfg.image_size);
    cfg.patch = doc.value("patch", cfg.patch);
    cfg.dim = doc.value("dim", cfg.dim);
    cfg.heads = doc.value("heads", cfg.heads);
    cfg.depth = doc.value("depth", cfg.depth);
    cfg.mlp_ratio = doc.value("mlp_ratio", cfg.mlp_ratio);
    cfg.joints = doc.value("joints", cfg.joints);
    cfg.init_seed = doc.value("init_seed", cfg.init_seed);
    if (doc.contains("attention")) {
      cfg.attention =
          attention_mode_from_name(doc.at("attention").get<std::string>());
    }
    if (doc.contains("modality")) {
      cfg.modality =
          data::modality_from_name(doc.at("modality").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.dim;
  const std::size_t c = cfg.channels();
  const std::size_t p = cfg.patch;
  std::size_t n = 0;
  n += c * p * p * d + d;
  n += (cfg.tokens_per_frame() + cfg.frames + sim::kNumMounts) * d;
  const std::size_t ln = 2 * d;
  const std::size_t attn = d * 3 * d + 3 * d + d * d + d;
  const std::size_t hidden = cfg.mlp_ratio * d;
  const std::size_t mlp = d * hidden + hidden + hidden * d + d;
  const std::size_t sublayers = cfg.attention == AttentionMode::kStConcat ? 1 : 2;
  n += cfg.depth * (sublayers * (ln + attn) + ln + mlp);
  n += ln;
  std::size_t ch = d;
  for (int i = 0; i < cfg.upsample_stages(); ++i) {
    const std::size_t next = ch / 2;
    n += 9 * ch * next + next + 2 * next;
    ch = next;
  }
  n += ch + 1;
  n += d * d + d + d * (cfg.joints + 1) + cfg.joints + 1;
  return n;
}

}  // namespace copilot::nn
