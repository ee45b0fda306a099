// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include <numeric>

#include <benchmark/benchmark.h>

#include "copilot/common/rng.hpp"
#include "copilot/model/network.hpp"
#include "copilot/render/camera.hpp"
#include "copilot/render/raycast.hpp"
#include "copilot/sim/collision.hpp"
#include "copilot/sim/motion.hpp"
#include "copilot/sim/scene.hpp"

namespace {

using namespace copilot;

struct Walk {
  sim::Scene scene = sim::generate_scene(11);
  sim::MotionSequence motion = sim::sample_motion(scene, 5, 10.0, 60);
};

const Walk& walk() {
  static const Walk w;
  return w;
}

void BM_RenderView(benchmark::State& state) {
  const auto& w = walk();
  render::Intrinsics intr;
  intr.width = intr.height = static_cast<int>(state.range(0));
  const int mount = 0;
  const auto cams = render::mount_cameras(w.motion.states.front(), sim::BodyModel::standard(),
                                          std::span<const int>(&mount, 1), intr);
  for (auto _ : state) benchmark::DoNotOptimize(render::render(w.scene, cams.front()));
  state.SetItemsProcessed(state.iterations() * intr.width * intr.height);
  state.SetLabel("pixels");
}
BENCHMARK(BM_RenderView)->Arg(32)->Arg(64)->Arg(128);

void BM_CollisionCheck(benchmark::State& state) {
  const auto& w = walk();
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::check_collision(w.scene, w.motion.states[k]));
    k = (k + 1) % w.motion.states.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CollisionCheck);

nn::Clip clip_for(const nn::ModelConfig& cfg) {
  nn::Clip c;
  c.views = cfg.views;
  c.frames = cfg.frames;
  c.channels = cfg.channels();
  c.height = c.width = cfg.image_size;
  c.mounts.resize(cfg.views);
  std::iota(c.mounts.begin(), c.mounts.end(), 0);
  Rng rng(3);
  c.data.resize(static_cast<std::size_t>(c.views) * c.frames * c.channels * c.height * c.width);
  for (auto& x : c.data) x = static_cast<float>(rng.uniform());
  return c;
}

template <nn::AttentionMode Mode>
void BM_ModelForward(benchmark::State& state) {
  nn::ModelConfig cfg;
  cfg.patch = 16;
  cfg.dim = 32;
  cfg.heads = 2;
  cfg.depth = 2;
  cfg.attention = Mode;
  const bool maps = state.range(0) != 0;
  const nn::CopilotModel<float> model(cfg);
  const auto clip = clip_for(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(clip, maps));
  state.SetLabel(maps ? "with heatmaps" : "classification only");
}
BENCHMARK(BM_ModelForward<nn::AttentionMode::kJointStv>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModelForward<nn::AttentionMode::kDividedStv>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModelForward<nn::AttentionMode::kStConcat>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModelForward<nn::AttentionMode::kSingleView>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
