// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "copilot/common/rng.hpp"
#include "copilot/dataset/tensor_io.hpp"
#include "copilot/model/checkpoint.hpp"
#include "copilot/model/network.hpp"
#include "copilot/sim/body.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace copilot::nn {
namespace {

using testing::MatD;
using testing::param;
using testing::random_clip;
using testing::randomize;
using testing::ref_layernorm;
using testing::ref_linear;
using testing::ref_attention;
using testing::ref_single_view_block;
using testing::ref_single_stream_backbone;
// ---- configuration ---------------------------------------------------------------

TEST(ModelConfig, DeskDefaults) {
  const ModelConfig cfg;
  EXPECT_EQ(cfg.grid(), 8);
  EXPECT_EQ(cfg.tokens_per_frame(), 64);
  EXPECT_EQ(cfg.dim, 128);
  EXPECT_EQ(cfg.heads, 4);
  EXPECT_EQ(cfg.depth, 4);
  EXPECT_EQ(cfg.upsample_stages(), 3);
  EXPECT_EQ(HeatmapHead<float>::stage_channels(cfg), (std::vector<int>{128, 64, 32, 16}));
  const auto pp = ModelConfig::full_scale();
  EXPECT_EQ(pp.grid(), 14);
  EXPECT_EQ(pp.dim, 768);
}

TEST(ModelConfig, RejectsInconsistentShapes) {
  ModelConfig a;
  a.image_size = 60;
  EXPECT_THROW(a.validate(), ConfigError);
  ModelConfig b;
  b.heads = 3;
  EXPECT_THROW(b.validate(), ConfigError);
  ModelConfig c;
  c.dim = 12;
  c.heads = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(attention_mode_from_name("cross"), ConfigError);
  ModelConfig d;
  d.mounts = {0, 9, 1};
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(ModelConfig, JsonRoundTrip) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.attention = AttentionMode::kDividedStv;
  cfg.modality = data::Modality::kRgbd;
  cfg.mounts = {1, 4};
  const auto j = model_config_to_json(cfg);
  EXPECT_EQ(model_config_to_json(model_config_from_json(j)), j);
}

TEST(ModelConfig, ParameterCountMatchesTensors) {
  for (auto mode : {AttentionMode::kJointStv, AttentionMode::kDividedStv,
                    AttentionMode::kStConcat, AttentionMode::kSingleView}) {
    ModelConfig cfg;
    cfg.attention = mode;
    cfg.depth = 2;
    EXPECT_EQ(parameter_count(cfg), CopilotModel<float>(cfg).parameter_count())
        << attention_mode_name(mode);
  }
}

TEST(ModelConfig, FullScaleParameterCountPin) {
  // Hand count: patch embedding 590592, positions 178176, twelve blocks of
  // 9451776, final norm 1536, heatmap head 3527329, classifier 599051.
  EXPECT_EQ(parameter_count(ModelConfig::full_scale()), 118317996u);
}

// ---- embedding -------------------------------------------------------------------

/// Zeroes the residual branches so every block is the identity map.
template <typename S>
void make_blocks_identity(CopilotModel<S>& m) {
  for (auto* p : m.parameters()) {
    const bool branch_out = p->name.find(".proj.") != std::string::npos ||
                            p->name.find(".fc2.") != std::string::npos;
    if (p->name.rfind("blocks.", 0) == 0 && branch_out) p->value.setZero();
  }
}

TEST(Embedding, ZeroInputGivesBiasPlusPositions) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.image_size = 16;
  cfg.patch = 4;
  CopilotModel<double> m(cfg);
  randomize(m.parameters(), 4, 0.1);
  make_blocks_identity(m);
  Clip clip = random_clip(cfg, 2, 1, {3, 1});
  std::fill(clip.data.begin(), clip.data.end(), 0.0f);
  const auto grid = m.features(clip);
  EXPECT_EQ(grid.tokens.rows(), 16 * cfg.frames * 2);
  for (int v = 0; v < 2; ++v) {
    for (int t = 0; t < cfg.frames; ++t) {
      for (int s = 0; s < 16; ++s) {
        MatD x = param(m, "embed.proj.bias").value +
                 param(m, "embed.pos_space").value.row(s) +
                 param(m, "embed.pos_time").value.row(t) +
                 param(m, "embed.pos_view").value.row(clip.mounts[v]);
        const MatD expect =
            ref_layernorm(x, param(m, "norm.gamma").value, param(m, "norm.beta").value);
        const MatD got = grid.tokens.row(grid.row(s / 4, s % 4, t, v));
        EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(Embedding, IdenticalViewsDifferOnlyThroughViewEmbedding) {
  const ModelConfig cfg = ModelConfig::tiny();
  CopilotModel<double> m(cfg);
  randomize(m.parameters(), 5, 0.1);
  Clip clip = random_clip(cfg, 2, 2, {0, 2});
  const std::size_t per_view = clip.data.size() / 2;
  std::copy_n(clip.data.begin(), per_view, clip.data.begin() + per_view);

  const auto view_gap = [&] {
    const auto g = m.features(clip);
    const auto half = g.tokens.rows() / 2;
    return (g.tokens.topRows(half) - g.tokens.bottomRows(half)).cwiseAbs().maxCoeff();
  };
  EXPECT_GT(view_gap(), 1e-3);
  param(m, "embed.pos_view").value.row(2) = param(m, "embed.pos_view").value.row(0);
  EXPECT_LT(view_gap(), 1e-12);
}

TEST(Embedding, ShapeMismatchIsRejected) {
  const ModelConfig cfg = ModelConfig::tiny();
  const CopilotModel<float> m(cfg);
  Clip c = random_clip(cfg, 2, 1);
  c.frames = 3;
  EXPECT_THROW(m.forward(c), ContractViolation);
  c = random_clip(cfg, 2, 1);
  c.data.pop_back();
  EXPECT_THROW(m.forward(c), ContractViolation);
  c = random_clip(cfg, 2, 1);
  c.channels = 3;
  EXPECT_THROW(m.forward(c), ContractViolation);
}

// ---- backbone ---------------------------------------------------------------------

TEST(Attention, WeightsPerQuerySumToOne) {
  Attention<double> a("a", 16, 2);
  randomize(ParamRefs<double>{&a.qkv.weight, &a.proj.weight}, 1, 0.5);
  const auto g = make_groupings(AttentionMode::kJointStv, 2, 3, 4);
  MatD x = MatD::Random(24, 16);
  Attention<double>::Cache cache;
  a.forward(x, g.second, &cache);
  ASSERT_EQ(cache.probs.size(), 2u * 2u);
  for (const auto& p : cache.probs) {
    for (Eigen::Index r = 0; r < p.rows(); ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-6);
  }
}

TEST(Block, SingleViewReducesToSpaceTimeReference) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.views = 1;
  cfg.frames = 3;
  cfg.image_size = 12;
  cfg.patch = 4;
  Block<double> b("b", cfg);
  ParamRefs<double> ps;
  b.collect(ps);
  randomize(ps, 11, 0.3);
  const int patches = cfg.tokens_per_frame();
  const auto g = make_groupings(AttentionMode::kJointStv, 1, cfg.frames, patches);
  const MatD x = MatD::Random(cfg.frames * patches, cfg.dim);
  const MatD got = b.forward(x, g, nullptr);
  const MatD ref = ref_single_view_block(x, b, cfg.frames, patches);
  EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Backbone, OneViewMatchesSingleStreamReference) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.views = 1;
  cfg.frames = 3;
  cfg.depth = 2;
  cfg.mounts = {2};
  CopilotModel<double> m(cfg);
  randomize(m.parameters(), 31, 0.2);
  const Clip clip = random_clip(cfg, 1, 4, {2});
  const auto grid = m.features(clip);
  const MatD ref = ref_single_stream_backbone(m, clip, 0);
  EXPECT_LT((grid.tokens - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Block, GroupingsFollowEachVariant) {
  const int V = 3, T = 4, P = 5;
  const auto joint = make_groupings(AttentionMode::kJointStv, V, T, P);
  ASSERT_TRUE(joint.first.has_value());
  EXPECT_EQ(joint.first->groups.size(), static_cast<std::size_t>(T));
  for (const auto& grp : joint.first->groups) EXPECT_EQ(grp.size(), static_cast<std::size_t>(V * P));
  EXPECT_EQ(joint.second.groups.size(), static_cast<std::size_t>(V));
  for (const auto& grp : joint.second.groups) EXPECT_EQ(grp.size(), static_cast<std::size_t>(T * P));

  const auto divided = make_groupings(AttentionMode::kDividedStv, V, T, P);
  EXPECT_EQ(divided.first->groups.size(), static_cast<std::size_t>(P));
  EXPECT_EQ(divided.second.groups.size(), static_cast<std::size_t>(V * T));

  const auto concat = make_groupings(AttentionMode::kStConcat, V, T, P);
  EXPECT_FALSE(concat.first.has_value());
  EXPECT_EQ(concat.second.groups.size(), static_cast<std::size_t>(V));

  for (const auto* g : {&*joint.first, &joint.second, &*divided.first, &divided.second,
                        &concat.second}) {
    std::vector<int> all;
    for (const auto& grp : g->groups) all.insert(all.end(), grp.begin(), grp.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expect(V * T * P);
    std::iota(expect.begin(), expect.end(), 0);
    EXPECT_EQ(all, expect);
  }
}

TEST(Backbone, DeskFeatureGridShape) {
  const ModelConfig cfg;
  const CopilotModel<float> m(cfg);
  const auto grid = m.features(random_clip(cfg, 3, 3));
  EXPECT_EQ(grid.shape(), (std::array<int, 5>{8, 8, 10, 3, 128}));
  EXPECT_EQ(grid.tokens.rows(), 8 * 8 * 10 * 3);
}

TEST(Backbone, SingleViewUsesThePelvisStream) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.attention = AttentionMode::kSingleView;
  cfg.views = 6;
  CopilotModel<double> m(cfg);
  randomize(m.parameters(), 2, 0.05);
  const Clip all = random_clip(cfg, 6, 9);
  const auto grid = m.features(all);
  EXPECT_EQ(grid.views, 1);
  const int pelvis = static_cast<int>(sim::Mount::kPelvis);
  const auto alone = m.features(select_views(all, {pelvis}));
  EXPECT_EQ((grid.tokens - alone.tokens).cwiseAbs().maxCoeff(), 0.0);

  Clip shuffled = select_views(all, {4, pelvis, 0});
  EXPECT_EQ((m.features(shuffled).tokens - alone.tokens).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(m.features(select_views(all, {0, 2})), ContractViolation);
}

TEST(Backbone, JointAndConcatVariantsDiffer) {
  ModelConfig jc = ModelConfig::tiny();
  ModelConfig sc = jc;
  sc.attention = AttentionMode::kStConcat;
  CopilotModel<double> joint(jc);
  CopilotModel<double> concat(sc);
  randomize(joint.parameters(), 3, 0.1);
  for (auto* p : concat.parameters()) *p = param(joint, p->name);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Clip c = random_clip(jc, 2, 40 + s);
    const double diff =
        (joint.features(c).tokens - concat.features(c).tokens).cwiseAbs().maxCoeff();
    EXPECT_GT(diff, 1e-3);
  }
}

TEST(Backbone, ConcatKeepsViewsIndependent) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.attention = AttentionMode::kStConcat;
  CopilotModel<double> m(cfg);
  randomize(m.parameters(), 6, 0.1);
  Clip a = random_clip(cfg, 2, 1);
  Clip b = a;
  const std::size_t per_view = a.data.size() / 2;
  for (std::size_t i = per_view; i < a.data.size(); ++i) b.data[i] = 1.0f - b.data[i];
  const auto fa = m.features(a);
  const auto fb = m.features(b);
  const auto half = fa.tokens.rows() / 2;
  EXPECT_EQ((fa.tokens.topRows(half) - fb.tokens.topRows(half)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((fa.tokens.bottomRows(half) - fb.tokens.bottomRows(half)).cwiseAbs().maxCoeff(), 1e-3);
}

// ---- heads ---------------------------------------------------------------------------

TEST(Heads, HeatmapsAreDistributionsAndProbabilitiesBounded) {
  for (auto mode : {AttentionMode::kJointStv, AttentionMode::kDividedStv,
                    AttentionMode::kStConcat}) {
    ModelConfig cfg;
    cfg.depth = 1;
    cfg.attention = mode;
    CopilotModel<float> m(cfg);
    const auto pred = m.forward(random_clip(cfg, 3, 7));
    ASSERT_EQ(pred.maps.size(), 30u);
    for (const auto& map : pred.maps) {
      ASSERT_EQ(map.size(), 64 * 64);
      EXPECT_NEAR(map.cast<double>().sum(), 1.0, 1e-5);
      EXPECT_GE(map.minCoeff(), 0.0f);
    }
    EXPECT_GE(pred.y_col, 0.0f);
    EXPECT_LE(pred.y_col, 1.0f);
    ASSERT_EQ(pred.y_joint.size(), 10u);
    for (float p : pred.y_joint) {
      EXPECT_GE(p, 0.0f);
      EXPECT_LE(p, 1.0f);
    }
  }
}

TEST(Heads, ClassifierDependsOnlyOnPooledMean) {
  ModelConfig cfg = ModelConfig::tiny();
  ClassifyHead<double> head("cls", cfg);
  ParamRefs<double> ps;
  head.collect(ps);
  randomize(ps, 8, 0.5);
  const int rows = cfg.tokens_per_frame() * cfg.frames * cfg.views;
  const MatD f = MatD::Random(rows, cfg.dim);

  // Swap the two time steps of every view.
  MatD permuted(rows, cfg.dim);
  const int sp = cfg.tokens_per_frame();
  for (int v = 0; v < cfg.views; ++v) {
    for (int t = 0; t < cfg.frames; ++t) {
      permuted.middleRows((v * cfg.frames + (cfg.frames - 1 - t)) * sp, sp) =
          f.middleRows((v * cfg.frames + t) * sp, sp);
    }
  }
  // Same column means, different rows.
  MatD shifted = f;
  const MatD noise = MatD::Random(1, cfg.dim);
  shifted.row(0) += noise;
  shifted.row(1) -= noise;

  const MatD base = head.forward(f, nullptr);
  EXPECT_EQ(base.cols(), 11);
  EXPECT_LT((head.forward(permuted, nullptr) - base).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((head.forward(shifted, nullptr) - base).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((head.forward((f.array() + 0.5).matrix(), nullptr) - base).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Heads, MapSelectionSkipsUnrequestedFrames) {
  const ModelConfig cfg = ModelConfig::tiny();
  const CopilotModel<float> m(cfg);
  const Clip c = random_clip(cfg, 2, 1);
  const auto pred = m.forward(c, std::vector<char>{0, 1, 0, 0});
  EXPECT_EQ(pred.maps[0].size(), 0);
  EXPECT_EQ(pred.map(0, 1).size(), 64);
  EXPECT_TRUE(pred.map(0, 1).isApprox(m.forward(c).map(0, 1)));
}

// ---- gradients -------------------------------------------------------------------

struct Probe {
  double col = 0.0;
  std::vector<double> joint;
  std::vector<ColVec<double>> maps;

  double value(const Predictions<double>& p) const {
    double s = col * p.y_col;
    for (std::size_t j = 0; j < joint.size(); ++j) s += joint[j] * p.y_joint[j];
    for (std::size_t f = 0; f < maps.size(); ++f) s += maps[f].dot(p.maps[f]);
    return s;
  }
};

Probe make_probe(const ModelConfig& cfg, int stream_views, std::uint64_t seed) {
  Rng rng(seed);
  Probe pr;
  pr.col = rng.normal();
  for (int j = 0; j < cfg.joints; ++j) pr.joint.push_back(rng.normal());
  const int px = cfg.image_size * cfg.image_size;
  for (int f = 0; f < stream_views * cfg.frames; ++f) {
    ColVec<double> w(px);
    for (int i = 0; i < px; ++i) w(i) = rng.normal() * 50.0;
    pr.maps.push_back(w);
  }
  return pr;
}

double max_gradient_error(CopilotModel<double>& m, const Clip& clip, const Probe& probe) {
  const std::vector<char> want(probe.maps.size(), 1);
  typename CopilotModel<double>::TrainState state;
  m.zero_grad();
  m.forward_train(clip, want, state);
  OutputGrads<double> g;
  g.d_col = probe.col;
  g.d_joint = probe.joint;
  g.d_maps = probe.maps;
  m.backward(state, g);

  double worst = 0.0;
  Rng pick(17);
  const double eps = 1e-4;
  for (auto* p : m.parameters()) {
    const Eigen::Index n = p->value.size();
    for (int k = 0; k < std::min<Eigen::Index>(10, n); ++k) {
      const Eigen::Index i = n <= 10 ? k : pick.uniform_int(0, n - 1);
      double& w = p->value.data()[i];
      const double keep = w;
      w = keep + eps;
      const double up = probe.value(m.forward(clip));
      w = keep - eps;
      const double down = probe.value(m.forward(clip));
      w = keep;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p->grad.data()[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      const double err = std::abs(numeric - analytic) / scale;
      EXPECT_LT(err, 1e-3) << p->name << "[" << i << "] analytic " << analytic
                           << " numeric " << numeric;
      worst = std::max(worst, err);
    }
  }
  return worst;
}

class GradientCheck : public ::testing::TestWithParam<AttentionMode> {};

TEST_P(GradientCheck, AnalyticMatchesCentralDifferences) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.attention = GetParam();
  cfg.modality = data::Modality::kRgbd;
  CopilotModel<double> m(cfg);
  randomize(m.parameters(), 21, 0.05);
  const Clip clip = random_clip(cfg, 2, 5, {1, 3});
  const int sv = cfg.stream_views();
  EXPECT_LT(max_gradient_error(m, clip, make_probe(cfg, sv, 8)), 1e-3);
}

INSTANTIATE_TEST_SUITE_P(AllVariants, GradientCheck,
                         ::testing::Values(AttentionMode::kJointStv,
                                           AttentionMode::kDividedStv,
                                           AttentionMode::kStConcat,
                                           AttentionMode::kSingleView),
                         [](const auto& info) {
                           return std::string(attention_mode_name(info.param));
                         });

// ---- determinism and persistence ------------------------------------------------------

TEST(Model, SameSeedSameWeightsAndOutputs) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.init_seed = 12;
  const CopilotModel<float> a(cfg);
  const CopilotModel<float> b(cfg);
  const Clip c = random_clip(cfg, 2, 3);
  const auto pa = a.forward(c);
  const auto pb = b.forward(c);
  EXPECT_EQ(pa.y_col, pb.y_col);
  EXPECT_EQ(pa.y_joint, pb.y_joint);
  for (std::size_t f = 0; f < pa.maps.size(); ++f) EXPECT_EQ(pa.maps[f], pb.maps[f]);
  EXPECT_EQ(a.forward(c).y_col, pa.y_col);

  cfg.init_seed = 13;
  EXPECT_NE(CopilotModel<float>(cfg).forward(c).y_col, pa.y_col);
}

TEST(Model, DoubleCopyAgreesWithFloat) {
  const ModelConfig cfg = ModelConfig::tiny();
  const CopilotModel<float> f(cfg);
  CopilotModel<double> d(cfg);
  d.load_from(f);
  const Clip c = random_clip(cfg, 2, 4);
  EXPECT_NEAR(f.forward(c).y_col, d.forward(c).y_col, 1e-5);
}

TEST(Checkpoint, RoundTripPreservesWeightsAndMeta) {
  const auto dir = testing::temp_dir("checkpoint");
  ModelConfig cfg = ModelConfig::tiny();
  cfg.attention = AttentionMode::kDividedStv;
  cfg.mounts = {1, 0};
  Model m(cfg);
  randomize(m.parameters(), 30, 0.1);
  save_checkpoint(m, dir / "ck", {{"best_epoch", 3}});
  const auto loaded = load_checkpoint(dir / "ck");
  EXPECT_EQ(loaded.meta.at("best_epoch"), 3);
  EXPECT_EQ(model_config_to_json(loaded.model.config()), model_config_to_json(cfg));
  const auto a = m.parameters();
  const auto b = loaded.model.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i]->name, b[i]->name);
    EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
  }
  const Clip c = random_clip(cfg, 2, 6, {1, 0});
  EXPECT_EQ(m.forward(c).y_col, loaded.model.forward(c).y_col);
}

TEST(Checkpoint, MissingDirectoryIsAnError) {
  EXPECT_THROW(load_checkpoint(testing::temp_dir("ck_missing") / "none"), data::ShardError);
}

}  // namespace
}  // namespace copilot::nn
