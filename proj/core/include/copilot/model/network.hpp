// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "copilot/common/error.hpp"
#include "copilot/model/clip.hpp"
#include "copilot/model/config.hpp"
#include "copilot/model/layers.hpp"

namespace copilot::nn {

/// Backbone output: one D-dim token per (view, frame, patch), rows in
/// (v, t, s) order with s = row * grid + col.
template <typename S>
struct FeatureGrid {
  int grid_h = 0;
  int grid_w = 0;
  int frames = 0;
  int views = 0;
  int dim = 0;
  Mat<S> tokens;

  /// (H_f, W_f, T, V, D).
  std::array<int, 5> shape() const {
    return {grid_h, grid_w, frames, views, dim};
  }
  Eigen::Index row(int h, int w, int t, int v) const {
    return (static_cast<Eigen::Index>(v) * frames + t) * grid_h * grid_w +
           static_cast<Eigen::Index>(h) * grid_w + w;
  }
};

template <typename S>
struct Predictions {
  S y_col = 0;
  std::vector<S> y_joint;
  /// Positions (in the input clip) of the views the backbone consumed.
  std::vector<int> view_index;
  int frames = 0;
  int height = 0;
  int width = 0;
  /// Per-pixel probabilities for each (stream view, frame), index
  /// v * frames + t; empty where not computed.
  std::vector<ColVec<S>> maps;

  int stream_views() const { return static_cast<int>(view_index.size()); }
  const ColVec<S>& map(int v, int t) const { return maps[v * frames + t]; }
};

/// Loss gradients with respect to the network's probability outputs.
template <typename S>
struct OutputGrads {
  S d_col = 0;
  std::vector<S> d_joint;
  /// Same indexing as Predictions::maps; empty entries carry no gradient.
  std::vector<ColVec<S>> d_maps;
};

/// Groupings of the two attention sub-layers of a block. `first` is empty
/// when the mode has a single sub-layer.
struct BlockGroupings {
  std::optional<Grouping> first;
  Grouping second;
};
BlockGroupings make_groupings(AttentionMode mode, int views, int frames,
                              int patches);

template <typename S>
struct Block {
  struct Cache {
    typename LayerNorm<S>::Cache ln1, ln2, ln3;
    typename Attention<S>::Cache attn1, attn2;
    Mat<S> n3;
    Mat<S> hidden;
    Mat<S> act;
  };

  bool has_first = true;
  LayerNorm<S> ln1;
  Attention<S> attn1;
  LayerNorm<S> ln2;
  Attention<S> attn2;
  LayerNorm<S> ln3;
  Linear<S> fc1;
  Linear<S> fc2;

  Block() = default;
  Block(const std::string& name, const ModelConfig& cfg);

  Mat<S> forward(const Mat<S>& x, const BlockGroupings& g, Cache* cache) const;
  Mat<S> backward(const Cache& cache, const BlockGroupings& g,
                  const Mat<S>& dy);
  void collect(ParamRefs<S>& out);
};

/// Up-samples one frame's (grid*grid, D) features to a per-pixel
/// distribution over the image.
template <typename S>
struct HeatmapHead {
  struct Cache {
    std::vector<typename Conv3x3<S>::Cache> conv;
    std::vector<typename GroupNorm<S>::Cache> norm;
    std::vector<Mat<S>> act;
    ColVec<S> probs;
  };

  int grid = 0;
  std::vector<Conv3x3<S>> convs;
  std::vector<GroupNorm<S>> norms;
  Linear<S> out;

  HeatmapHead() = default;
  HeatmapHead(const std::string& name, const ModelConfig& cfg);

  ColVec<S> forward(const Mat<S>& frame, Cache* cache) const;
  Mat<S> backward(const Cache& cache, const ColVec<S>& d_probs);
  void collect(ParamRefs<S>& out);
  /// Channel width after each stage, starting with D.
  static std::vector<int> stage_channels(const ModelConfig& cfg);
};

/// Mean-pools every token and maps the result to J + 1 sigmoid outputs:
/// J per-joint probabilities followed by the overall collision probability.
template <typename S>
struct ClassifyHead {
  struct Cache {
    Mat<S> pooled;
    Mat<S> hidden;
    Mat<S> act;
    Mat<S> probs;
    Eigen::Index tokens = 0;
  };

  Linear<S> fc1;
  Linear<S> fc2;

  ClassifyHead() = default;
  ClassifyHead(const std::string& name, const ModelConfig& cfg);

  /// Returns a (1, J + 1) row of probabilities.
  Mat<S> forward(const Mat<S>& features, Cache* cache) const;
  Mat<S> backward(const Cache& cache, const Mat<S>& d_probs);
  void collect(ParamRefs<S>& out);
};

template <typename S>
class CopilotModel {
 public:
  struct TrainState {
    std::vector<int> view_index;
    std::vector<int> mounts;
    Mat<S> patches;
    BlockGroupings groupings;
    std::vector<typename Block<S>::Cache> blocks;
    typename LayerNorm<S>::Cache norm;
    Mat<S> features;
    typename ClassifyHead<S>::Cache cls;
    std::vector<typename HeatmapHead<S>::Cache> maps;
    std::vector<char> map_computed;
  };

  /// Builds the network and initializes it from cfg.init_seed.
  explicit CopilotModel(const ModelConfig& cfg);
  CopilotModel(const CopilotModel& other);
  CopilotModel& operator=(const CopilotModel& other);

  const ModelConfig& config() const { return cfg_; }
  const ParamRefs<S>& parameters() { return params_; }
  std::vector<const Parameter<S>*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  /// Views of `clip` the backbone consumes; single_view picks the pelvis.
  std::vector<int> stream_views(const Clip& clip) const;
  /// Flattens the chosen views into (tokens, C * P * P) patch vectors.
  Mat<S> patchify(const Clip& clip, const std::vector<int>& views) const;

  FeatureGrid<S> features(const Clip& clip) const;
  /// Inference; heatmaps are produced for every frame when `maps` is set.
  Predictions<S> forward(const Clip& clip, bool maps = true) const;
  /// Inference computing heatmaps only where want_map[v * T + t] != 0.
  Predictions<S> forward(const Clip& clip,
                         const std::vector<char>& want_map) const;

  /// Forward pass keeping activations. Heatmaps are computed only for
  /// frames with want_map[v * T + t] != 0 (stream views).
  Predictions<S> forward_train(const Clip& clip,
                               const std::vector<char>& want_map,
                               TrainState& state) const;
  /// Accumulates parameter gradients.
  void backward(const TrainState& state, const OutputGrads<S>& grads);

  /// Copies weights from a model of the same configuration and any scalar.
  template <typename T>
  void load_from(const CopilotModel<T>& other);

 private:
  void validate_clip(const Clip& clip) const;
  Mat<S> embed(const Mat<S>& patches, const std::vector<int>& mounts) const;
  void rebuild_params();

  ModelConfig cfg_;
  Linear<S> patch_proj_;
  Parameter<S> pos_space_;
  Parameter<S> pos_time_;
  Parameter<S> pos_view_;
  std::vector<Block<S>> blocks_;
  LayerNorm<S> norm_;
  HeatmapHead<S> map_head_;
  ClassifyHead<S> cls_head_;
  ParamRefs<S> params_;

  template <typename T>
  friend class CopilotModel;
};

template <typename S>
template <typename T>
void CopilotModel<S>::load_from(const CopilotModel<T>& other) {
  const auto& src = other.params_;
  if (src.size() != params_.size()) {
    throw ContractViolation("load_from: parameter lists differ");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (src[i]->value.rows() != params_[i]->value.rows() ||
        src[i]->value.cols() != params_[i]->value.cols()) {
      throw ContractViolation("load_from: shape mismatch at " +
                              params_[i]->name);
    }
    params_[i]->value = src[i]->value.template cast<S>();
  }
}

}  // namespace copilot::nn
