// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "copilot/common/rng.hpp"
#include "copilot/sim/body.hpp"

namespace copilot::nn {

namespace {

Grouping group_by(int views, int frames, int patches,
                  int (*key)(int v, int t, int s, int frames, int patches),
                  int n_groups) {
  Grouping g;
  g.tokens = views * frames * patches;
  g.groups.assign(n_groups, {});
  for (int v = 0; v < views; ++v) {
    for (int t = 0; t < frames; ++t) {
      for (int s = 0; s < patches; ++s) {
        g.groups[key(v, t, s, frames, patches)].push_back(
            (v * frames + t) * patches + s);
      }
    }
  }
  return g;
}

int key_time(int, int t, int, int, int) { return t; }
int key_view(int v, int, int, int, int) { return v; }
int key_space(int, int, int s, int, int) { return s; }
int key_frame(int v, int t, int, int frames, int) { return v * frames + t; }

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

BlockGroupings make_groupings(AttentionMode mode, int views, int frames,
                              int patches) {
  BlockGroupings g;
  switch (mode) {
    case AttentionMode::kJointStv:
    case AttentionMode::kSingleView:
      g.first = group_by(views, frames, patches, key_time, frames);
      g.second = group_by(views, frames, patches, key_view, views);
      break;
    case AttentionMode::kDividedStv:
      g.first = group_by(views, frames, patches, key_space, patches);
      g.second =
          group_by(views, frames, patches, key_frame, views * frames);
      break;
    case AttentionMode::kStConcat:
      g.second = group_by(views, frames, patches, key_view, views);
      break;
  }
  return g;
}

// ----------------------------------------------------------------- Block

template <typename S>
Block<S>::Block(const std::string& name, const ModelConfig& cfg)
    : has_first(cfg.attention != AttentionMode::kStConcat),
      ln2(name + ".ln2", cfg.dim),
      attn2(name + ".attn2", cfg.dim, cfg.heads),
      ln3(name + ".ln3", cfg.dim),
      fc1(name + ".fc1", cfg.dim, cfg.mlp_ratio * cfg.dim),
      fc2(name + ".fc2", cfg.mlp_ratio * cfg.dim, cfg.dim) {
  if (has_first) {
    ln1 = LayerNorm<S>(name + ".ln1", cfg.dim);
    attn1 = Attention<S>(name + ".attn1", cfg.dim, cfg.heads);
  }
}

template <typename S>
Mat<S> Block<S>::forward(const Mat<S>& x, const BlockGroupings& g,
                         Cache* cache) const {
  Mat<S> h = x;
  if (has_first) {
    const Mat<S> n1 = ln1.forward(h, cache ? &cache->ln1 : nullptr);
    h += attn1.forward(n1, *g.first, cache ? &cache->attn1 : nullptr);
  }
  const Mat<S> n2 = ln2.forward(h, cache ? &cache->ln2 : nullptr);
  h += attn2.forward(n2, g.second, cache ? &cache->attn2 : nullptr);
  Mat<S> n3 = ln3.forward(h, cache ? &cache->ln3 : nullptr);
  Mat<S> hidden = fc1.forward(n3);
  Mat<S> act = gelu(hidden);
  h += fc2.forward(act);
  if (cache != nullptr) {
    cache->n3 = std::move(n3);
    cache->hidden = std::move(hidden);
    cache->act = std::move(act);
  }
  return h;
}

template <typename S>
Mat<S> Block<S>::backward(const Cache& cache, const BlockGroupings& g,
                          const Mat<S>& dy) {
  Mat<S> dx = dy;
  {
    const Mat<S> dact = fc2.backward(cache.act, dy);
    const Mat<S> dhidden = gelu_backward(cache.hidden, dact);
    dx += ln3.backward(cache.ln3, fc1.backward(cache.n3, dhidden));
  }
  dx += ln2.backward(cache.ln2, attn2.backward(cache.attn2, g.second, dx));
  if (has_first) {
    dx += ln1.backward(cache.ln1, attn1.backward(cache.attn1, *g.first, dx));
  }
  return dx;
}

template <typename S>
void Block<S>::collect(ParamRefs<S>& out) {
  if (has_first) {
    ln1.collect(out);
    attn1.collect(out);
  }
  ln2.collect(out);
  attn2.collect(out);
  ln3.collect(out);
  fc1.collect(out);
  fc2.collect(out);
}

// ----------------------------------------------------------- HeatmapHead

template <typename S>
std::vector<int> HeatmapHead<S>::stage_channels(const ModelConfig& cfg) {
  std::vector<int> ch{cfg.dim};
  for (int i = 0; i < cfg.upsample_stages(); ++i) ch.push_back(ch.back() / 2);
  return ch;
}

template <typename S>
HeatmapHead<S>::HeatmapHead(const std::string& name, const ModelConfig& cfg)
    : grid(cfg.grid()) {
  const auto ch = stage_channels(cfg);
  for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
    const std::string stage = name + ".stages." + std::to_string(i);
    convs.emplace_back(stage + ".conv", ch[i], ch[i + 1]);
    norms.emplace_back(stage + ".norm", ch[i + 1], std::min(8, ch[i + 1]));
  }
  out = Linear<S>(name + ".out", ch.back(), 1);
}

template <typename S>
ColVec<S> HeatmapHead<S>::forward(const Mat<S>& frame, Cache* cache) const {
  Mat<S> x = frame;
  int h = grid;
  int w = grid;
  if (cache != nullptr) {
    cache->conv.resize(convs.size());
    cache->norm.resize(norms.size());
    cache->act.resize(convs.size());
  }
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const Mat<S> up = upsample2x(x, h, w);
    h *= 2;
    w *= 2;
    const Mat<S> y =
        convs[i].forward(up, h, w, cache ? &cache->conv[i] : nullptr);
    x = norms[i].forward(y, cache ? &cache->norm[i] : nullptr).cwiseMax(S(0));
    if (cache != nullptr) cache->act[i] = x;
  }
  const ColVec<S> logits = out.forward(x).col(0);
  ColVec<S> probs = softmax(logits);
  if (cache != nullptr) cache->probs = probs;
  return probs;
}

template <typename S>
Mat<S> HeatmapHead<S>::backward(const Cache& cache, const ColVec<S>& d_probs) {
  const ColVec<S>& p = cache.probs;
  const S inner = p.dot(d_probs);
  Mat<S> dlogits = (p.array() * (d_probs.array() - inner)).matrix();
  Mat<S> dx = out.backward(cache.act.back(), dlogits);
  int h = grid << convs.size();
  int w = h;
  for (std::size_t k = convs.size(); k-- > 0;) {
    const Mat<S> dz =
        (dx.array() * (cache.act[k].array() > S(0)).template cast<S>())
            .matrix();
    const Mat<S> dy = norms[k].backward(cache.norm[k], dz);
    const Mat<S> dup = convs[k].backward(cache.conv[k], dy);
    h /= 2;
    w /= 2;
    dx = upsample2x_backward(dup, h, w);
  }
  return dx;
}

template <typename S>
void HeatmapHead<S>::collect(ParamRefs<S>& out_params) {
  for (std::size_t i = 0; i < convs.size(); ++i) {
    convs[i].collect(out_params);
    norms[i].collect(out_params);
  }
  out.collect(out_params);
}

// ---------------------------------------------------------- ClassifyHead

template <typename S>
ClassifyHead<S>::ClassifyHead(const std::string& name, const ModelConfig& cfg)
    : fc1(name + ".fc1", cfg.dim, cfg.dim),
      fc2(name + ".fc2", cfg.dim, cfg.joints + 1) {}

template <typename S>
Mat<S> ClassifyHead<S>::forward(const Mat<S>& features, Cache* cache) const {
  Mat<S> pooled = features.colwise().mean();
  Mat<S> hidden = fc1.forward(pooled);
  Mat<S> act = gelu(hidden);
  const Mat<S> logits = fc2.forward(act);
  Mat<S> probs = logits.unaryExpr(
      [](S v) { return S(1) / (S(1) + std::exp(-v)); });
  if (cache != nullptr) {
    cache->pooled = std::move(pooled);
    cache->hidden = std::move(hidden);
    cache->act = std::move(act);
    cache->probs = probs;
    cache->tokens = features.rows();
  }
  return probs;
}

template <typename S>
Mat<S> ClassifyHead<S>::backward(const Cache& cache, const Mat<S>& d_probs) {
  const Mat<S> dlogits =
      (d_probs.array() * cache.probs.array() * (S(1) - cache.probs.array()))
          .matrix();
  const Mat<S> dact = fc2.backward(cache.act, dlogits);
  const Mat<S> dhidden = gelu_backward(cache.hidden, dact);
  const Mat<S> dpooled = fc1.backward(cache.pooled, dhidden);
  Mat<S> df(cache.tokens, dpooled.cols());
  df.rowwise() = dpooled.row(0) / static_cast<S>(cache.tokens);
  return df;
}

template <typename S>
void ClassifyHead<S>::collect(ParamRefs<S>& out) {
  fc1.collect(out);
  fc2.collect(out);
}

// ---------------------------------------------------------- CopilotModel

template <typename S>
CopilotModel<S>::CopilotModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.dim;
  const int patch_dim = cfg_.channels() * cfg_.patch * cfg_.patch;
  patch_proj_ = Linear<S>("embed.proj", patch_dim, d);
  pos_space_ = Parameter<S>("embed.pos_space", cfg_.tokens_per_frame(), d);
  pos_time_ = Parameter<S>("embed.pos_time", cfg_.frames, d);
  pos_view_ = Parameter<S>("embed.pos_view", sim::kNumMounts, d);
  for (int b = 0; b < cfg_.depth; ++b) {
    blocks_.emplace_back("blocks." + std::to_string(b), cfg_);
  }
  norm_ = LayerNorm<S>("norm", d);
  map_head_ = HeatmapHead<S>("map_head", cfg_);
  cls_head_ = ClassifyHead<S>("cls_head", cfg_);
  rebuild_params();

  Rng rng(cfg_.init_seed);
  for (Parameter<S>* p : params_) {
    Mat<S>& m = p->value;
    if (ends_with(p->name, ".gamma")) {
      m.setOnes();
    } else if (ends_with(p->name, ".beta") || ends_with(p->name, ".bias")) {
      m.setZero();
    } else {
      const bool conv = p->name.find(".conv.") != std::string::npos;
      const double stddev =
          conv ? std::sqrt(2.0 / static_cast<double>(m.rows())) : 0.02;
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<S>(rng.truncated_normal(stddev));
      }
    }
  }
}

template <typename S>
CopilotModel<S>::CopilotModel(const CopilotModel& other)
    : cfg_(other.cfg_),
      patch_proj_(other.patch_proj_),
      pos_space_(other.pos_space_),
      pos_time_(other.pos_time_),
      pos_view_(other.pos_view_),
      blocks_(other.blocks_),
      norm_(other.norm_),
      map_head_(other.map_head_),
      cls_head_(other.cls_head_) {
  rebuild_params();
}

template <typename S>
CopilotModel<S>& CopilotModel<S>::operator=(const CopilotModel& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    patch_proj_ = other.patch_proj_;
    pos_space_ = other.pos_space_;
    pos_time_ = other.pos_time_;
    pos_view_ = other.pos_view_;
    blocks_ = other.blocks_;
    norm_ = other.norm_;
    map_head_ = other.map_head_;
    cls_head_ = other.cls_head_;
    rebuild_params();
  }
  return *this;
}

template <typename S>
void CopilotModel<S>::rebuild_params() {
  params_.clear();
  patch_proj_.collect(params_);
  params_.push_back(&pos_space_);
  params_.push_back(&pos_time_);
  params_.push_back(&pos_view_);
  for (auto& b : blocks_) b.collect(params_);
  norm_.collect(params_);
  map_head_.collect(params_);
  cls_head_.collect(params_);
}

template <typename S>
std::vector<const Parameter<S>*> CopilotModel<S>::parameters() const {
  return {params_.begin(), params_.end()};
}

template <typename S>
std::size_t CopilotModel<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename S>
void CopilotModel<S>::zero_grad() {
  for (auto* p : params_) p->grad.setZero();
}

template <typename S>
void CopilotModel<S>::validate_clip(const Clip& clip) const {
  const auto fail = [&](const std::string& what) {
    throw ContractViolation("model input: " + what);
  };
  if (clip.frames != cfg_.frames) {
    fail(std::to_string(clip.frames) + " frames, model expects " +
         std::to_string(cfg_.frames));
  }
  if (clip.height != cfg_.image_size || clip.width != cfg_.image_size) {
    fail("frame size " + std::to_string(clip.height) + "x" +
         std::to_string(clip.width) + ", model expects " +
         std::to_string(cfg_.image_size));
  }
  if (clip.channels != cfg_.channels()) {
    fail(std::to_string(clip.channels) + " channels, model expects " +
         std::to_string(cfg_.channels()));
  }
  if (clip.views <= 0 || static_cast<int>(clip.mounts.size()) != clip.views) {
    fail("view/mount count mismatch");
  }
  for (int m : clip.mounts) {
    if (m < 0 || m >= sim::kNumMounts) fail("unknown mount " + std::to_string(m));
  }
  if (clip.data.size() != static_cast<std::size_t>(clip.views) * clip.frames *
                              clip.channels * clip.height * clip.width) {
    fail("payload size does not match its shape");
  }
}

template <typename S>
std::vector<int> CopilotModel<S>::stream_views(const Clip& clip) const {
  if (cfg_.attention != AttentionMode::kSingleView) {
    std::vector<int> all(clip.views);
    for (int v = 0; v < clip.views; ++v) all[v] = v;
    return all;
  }
  const int pelvis = static_cast<int>(sim::Mount::kPelvis);
  for (int v = 0; v < clip.views; ++v) {
    if (clip.mounts[v] == pelvis) return {v};
  }
  throw ContractViolation("single_view model needs a pelvis camera stream");
}

template <typename S>
Mat<S> CopilotModel<S>::patchify(const Clip& clip,
                                 const std::vector<int>& views) const {
  const int p = cfg_.patch;
  const int g = cfg_.grid();
  const int c = clip.channels;
  const int sp = g * g;
  Mat<S> out(static_cast<Eigen::Index>(views.size()) * clip.frames * sp,
             c * p * p);
  for (std::size_t vi = 0; vi < views.size(); ++vi) {
    for (int t = 0; t < clip.frames; ++t) {
      for (int gy = 0; gy < g; ++gy) {
        for (int gx = 0; gx < g; ++gx) {
          const Eigen::Index row =
              (static_cast<Eigen::Index>(vi) * clip.frames + t) * sp +
              gy * g + gx;
          S* dst = out.row(row).data();
          for (int ch = 0; ch < c; ++ch) {
            for (int py = 0; py < p; ++py) {
              const float* src =
                  &clip.data[clip.index(views[vi], t, ch, gy * p + py, gx * p)];
              for (int px = 0; px < p; ++px) {
                *dst++ = static_cast<S>(src[px]);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename S>
Mat<S> CopilotModel<S>::embed(const Mat<S>& patches,
                              const std::vector<int>& mounts) const {
  Mat<S> x = patch_proj_.forward(patches);
  const int sp = cfg_.tokens_per_frame();
  const int frames = cfg_.frames;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int s = static_cast<int>(r % sp);
    const int t = static_cast<int>((r / sp) % frames);
    const int v = static_cast<int>(r / (static_cast<Eigen::Index>(sp) * frames));
    x.row(r) += pos_space_.value.row(s) + pos_time_.value.row(t) +
                pos_view_.value.row(mounts[v]);
  }
  return x;
}

template <typename S>
Predictions<S> CopilotModel<S>::forward_train(const Clip& clip,
                                              const std::vector<char>& want_map,
                                              TrainState& state) const {
  validate_clip(clip);
  state.view_index = stream_views(clip);
  const int vs = static_cast<int>(state.view_index.size());
  const int frames = cfg_.frames;
  const int sp = cfg_.tokens_per_frame();
  if (!want_map.empty() && want_map.size() != static_cast<std::size_t>(vs) * frames) {
    throw ContractViolation("want_map must have one entry per stream frame");
  }
  state.mounts.clear();
  for (int v : state.view_index) state.mounts.push_back(clip.mounts[v]);
  state.patches = patchify(clip, state.view_index);
  state.groupings = make_groupings(cfg_.attention, vs, frames, sp);
  Mat<S> x = embed(state.patches, state.mounts);
  state.blocks.resize(blocks_.size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    x = blocks_[b].forward(x, state.groupings, &state.blocks[b]);
  }
  state.features = norm_.forward(x, &state.norm);

  Predictions<S> pred;
  pred.view_index = state.view_index;
  pred.frames = frames;
  pred.height = cfg_.image_size;
  pred.width = cfg_.image_size;
  const Mat<S> probs = cls_head_.forward(state.features, &state.cls);
  pred.y_joint.assign(probs.data(), probs.data() + cfg_.joints);
  pred.y_col = probs(0, cfg_.joints);

  pred.maps.assign(static_cast<std::size_t>(vs) * frames, ColVec<S>());
  state.maps.assign(pred.maps.size(), {});
  state.map_computed.assign(pred.maps.size(), 0);
  for (std::size_t f = 0; f < want_map.size(); ++f) {
    if (!want_map[f]) continue;
    pred.maps[f] = map_head_.forward(
        state.features.middleRows(static_cast<Eigen::Index>(f) * sp, sp),
        &state.maps[f]);
    state.map_computed[f] = 1;
  }
  return pred;
}

template <typename S>
void CopilotModel<S>::backward(const TrainState& state,
                               const OutputGrads<S>& grads) {
  const int sp = cfg_.tokens_per_frame();
  Mat<S> dprobs = Mat<S>::Zero(1, cfg_.joints + 1);
  for (int j = 0; j < cfg_.joints && j < static_cast<int>(grads.d_joint.size()); ++j) {
    dprobs(0, j) = grads.d_joint[j];
  }
  dprobs(0, cfg_.joints) = grads.d_col;
  Mat<S> df = cls_head_.backward(state.cls, dprobs);
  for (std::size_t f = 0; f < grads.d_maps.size(); ++f) {
    if (grads.d_maps[f].size() == 0) continue;
    if (f >= state.map_computed.size() || !state.map_computed[f]) {
      throw ContractViolation("map gradient for a frame that was not computed");
    }
    df.middleRows(static_cast<Eigen::Index>(f) * sp, sp) +=
        map_head_.backward(state.maps[f], grads.d_maps[f]);
  }
  Mat<S> dx = norm_.backward(state.norm, df);
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    dx = blocks_[b].backward(state.blocks[b], state.groupings, dx);
  }
  patch_proj_.weight.grad.noalias() += state.patches.transpose() * dx;
  patch_proj_.bias.grad.row(0) += dx.colwise().sum();
  const int frames = cfg_.frames;
  for (Eigen::Index r = 0; r < dx.rows(); ++r) {
    const int s = static_cast<int>(r % sp);
    const int t = static_cast<int>((r / sp) % frames);
    const int v = static_cast<int>(r / (static_cast<Eigen::Index>(sp) * frames));
    pos_space_.grad.row(s) += dx.row(r);
    pos_time_.grad.row(t) += dx.row(r);
    pos_view_.grad.row(state.mounts[v]) += dx.row(r);
  }
}

template <typename S>
FeatureGrid<S> CopilotModel<S>::features(const Clip& clip) const {
  validate_clip(clip);
  const auto views = stream_views(clip);
  std::vector<int> mounts;
  for (int v : views) mounts.push_back(clip.mounts[v]);
  const int vs = static_cast<int>(views.size());
  const auto groupings =
      make_groupings(cfg_.attention, vs, cfg_.frames, cfg_.tokens_per_frame());
  Mat<S> x = embed(patchify(clip, views), mounts);
  for (const auto& b : blocks_) x = b.forward(x, groupings, nullptr);
  FeatureGrid<S> grid;
  grid.grid_h = cfg_.grid();
  grid.grid_w = cfg_.grid();
  grid.frames = cfg_.frames;
  grid.views = vs;
  grid.dim = cfg_.dim;
  grid.tokens = norm_.forward(x, nullptr);
  return grid;
}

template <typename S>
Predictions<S> CopilotModel<S>::forward(const Clip& clip, bool maps) const {
  const std::size_t frames =
      stream_views(clip).size() * static_cast<std::size_t>(cfg_.frames);
  return forward(clip, std::vector<char>(frames, maps ? 1 : 0));
}

template <typename S>
Predictions<S> CopilotModel<S>::forward(
    const Clip& clip, const std::vector<char>& want_map) const {
  const FeatureGrid<S> grid = features(clip);
  Predictions<S> pred;
  pred.view_index = stream_views(clip);
  pred.frames = cfg_.frames;
  pred.height = cfg_.image_size;
  pred.width = cfg_.image_size;
  const Mat<S> probs = cls_head_.forward(grid.tokens, nullptr);
  pred.y_joint.assign(probs.data(), probs.data() + cfg_.joints);
  pred.y_col = probs(0, cfg_.joints);
  const int sp = cfg_.tokens_per_frame();
  pred.maps.assign(static_cast<std::size_t>(grid.views) * cfg_.frames,
                   ColVec<S>());
  if (want_map.size() != pred.maps.size()) {
    throw ContractViolation("want_map must have one entry per stream frame");
  }
  for (std::size_t f = 0; f < pred.maps.size(); ++f) {
    if (!want_map[f]) continue;
    pred.maps[f] = map_head_.forward(
        grid.tokens.middleRows(static_cast<Eigen::Index>(f) * sp, sp), nullptr);
  }
  return pred;
}

template struct Block<float>;
template struct Block<double>;
template struct HeatmapHead<float>;
template struct HeatmapHead<double>;
template struct ClassifyHead<float>;
template struct ClassifyHead<double>;
template class CopilotModel<float>;
template class CopilotModel<double>;

}  // namespace copilot::nn
