// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: prints one PASS/FAIL line per criterion and writes every
// measured value to <work>/acceptance_report.json. Exits nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "copilot/common/rng.hpp"
#include "copilot/control/controller.hpp"
#include "copilot/dataset/generate.hpp"
#include "copilot/dataset/shard.hpp"
#include "copilot/model/checkpoint.hpp"
#include "copilot/model/clip.hpp"
#include "copilot/render/camera.hpp"
#include "copilot/render/raycast.hpp"
#include "copilot/sim/collision.hpp"
#include "copilot/sim/motion.hpp"
#include "copilot/train/trainer.hpp"
#include "oracles.hpp"

namespace copilot::acceptance {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string pct(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * v << "%";
  return s.str();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ---- run settings ---------------------------------------------------------------------

data::DatagenConfig dataset_recipe() {
  data::DatagenConfig cfg;
  cfg.seed = 0;
  cfg.scenes = 30;
  cfg.unseen_scenes = 6;
  cfg.train_sequences = 70;
  cfg.motion_eval_sequences = 12;
  cfg.unseen_sequences = 70;
  cfg.max_frames = 60;
  cfg.workers = 0;
  cfg.data.modality = data::Modality::kRgbd;
  return cfg;
}

enum class Variant { kFull, kNoMap, kRootOnly, kRgb };

constexpr Variant kVariants[] = {Variant::kFull, Variant::kNoMap, Variant::kRootOnly,
                                 Variant::kRgb};
constexpr std::uint64_t kSeeds[] = {0, 1, 2};

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoMap: return "no_map";
    case Variant::kRootOnly: return "root_only";
    case Variant::kRgb: return "rgb";
  }
  return "?";
}

nn::ModelConfig model_recipe(Variant v, std::uint64_t seed) {
  nn::ModelConfig m;
  m.views = 3;
  m.frames = 10;
  m.image_size = 64;
  m.patch = 16;
  m.dim = 32;
  m.heads = 2;
  m.depth = 2;
  m.modality = v == Variant::kRgb ? data::Modality::kRgb : data::Modality::kDepth;
  m.attention = v == Variant::kRootOnly ? nn::AttentionMode::kSingleView
                                        : nn::AttentionMode::kJointStv;
  m.init_seed = seed;
  m.validate();
  return m;
}

train::TrainConfig train_recipe(Variant v, std::uint64_t seed) {
  train::TrainConfig t;
  t.epochs = 15;
  t.batch_size = 8;
  t.learning_rate = 3e-4;
  t.warmup_steps = 50;
  t.map_frames = 3;
  t.seed = seed;
  if (v == Variant::kNoMap) t.weights.map = 0.0;
  t.validate();
  return t;
}

// ---- synthetic fixtures ----------------------------------------------------------------

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  for (auto& x : p) x = rng.uniform(0.01, 1.0);
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= z;
  return p;
}

data::Window synthetic_window(const nn::ModelConfig& cfg, Rng& rng, bool positive, int index) {
  data::Window w;
  w.window_id = "syn/" + std::to_string(index);
  w.scene_id = "syn";
  w.modality = data::Modality::kRgbd;
  w.views = cfg.views;
  w.frames = cfg.frames;
  w.height = cfg.image_size;
  w.width = cfg.image_size;
  w.mounts = cfg.resolved_mounts();
  const std::size_t frames = static_cast<std::size_t>(w.views) * w.frames;
  w.depth.resize(frames * w.pixels());
  for (auto& d : w.depth) d = static_cast<float>(rng.uniform(0.3, 6.0));
  w.rgb.resize(frames * w.pixels() * 3);
  for (auto& c : w.rgb) c = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  w.y_col = positive;
  w.map_valid.assign(frames, 0);
  if (positive) {
    w.y_joint[rng.uniform_int(0, sim::kNumJoints - 1)] = true;
    for (auto& v : w.map_valid) v = rng.bernoulli(0.7) ? 1 : 0;
    w.map_valid[0] = 1;
    for (auto v : w.map_valid) {
      if (!v) continue;
      const auto d = random_distribution(rng, w.pixels());
      w.y_map.insert(w.y_map.end(), d.begin(), d.end());
    }
  }
  return w;
}

std::vector<const data::Window*> pointers(const std::vector<data::Window>& ws) {
  std::vector<const data::Window*> out;
  for (const auto& w : ws) out.push_back(&w);
  return out;
}

// ---- 1: gradients -------------------------------------------------------------------------

/// On/off state of every map-head ReLU the batch loss passes through.
std::vector<bool> relu_pattern(const nn::CopilotModel<double>& m,
                               const std::vector<data::Window>& windows) {
  std::vector<bool> bits;
  for (const auto& w : windows) {
    const auto clip = nn::make_clip(w, m.config().modality);
    const auto views = m.stream_views(clip);
    const auto want = train::supervised_frames(w, views, m.config().frames, 0, nullptr);
    nn::CopilotModel<double>::TrainState st;
    m.forward_train(clip, want, st);
    for (std::size_t f = 0; f < st.maps.size(); ++f) {
      if (!st.map_computed[f]) continue;
      for (const auto& act : st.maps[f].act) {
        for (Eigen::Index i = 0; i < act.size(); ++i) bits.push_back(act.data()[i] > 0.0);
      }
    }
  }
  return bits;
}

Verdict gradient_check(json& report) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_at;
  std::size_t entries = 0, shifted = 0, skipped = 0;
  int mismatches = 0;
  for (auto mode : {nn::AttentionMode::kJointStv, nn::AttentionMode::kDividedStv,
                    nn::AttentionMode::kStConcat, nn::AttentionMode::kSingleView}) {
    nn::ModelConfig cfg = nn::ModelConfig::tiny();
    cfg.attention = mode;
    cfg.modality = data::Modality::kRgbd;
    cfg.init_seed = 5;
    nn::CopilotModel<double> model(cfg);
    testing::randomize(model.parameters(), 41, 0.05);
    Rng rng(7);
    std::vector<data::Window> windows;
    for (int i = 0; i < 3; ++i) windows.push_back(synthetic_window(cfg, rng, i != 1, i));
    const auto batch = pointers(windows);
    train::TrainConfig tc;
    tc.weights = {0.8, 1.2, 0.6};

    model.zero_grad();
    train::batch_loss<double>(model, batch, tc, {}, true);
    std::map<std::string, nn::Mat<double>> base;
    for (const auto* p : model.parameters()) base[p->name] = p->grad;
    Rng pick(13);
    const double eps = 1e-4;
    for (auto* p : model.parameters()) {
      const Eigen::Index n = p->value.size();
      const Eigen::Index wanted = std::min<Eigen::Index>(10, n);
      for (Eigen::Index k = 0; k < wanted; ++k) {
        const Eigen::Index i = n <= 10 ? k : pick.uniform_int(0, n - 1);
        double& w = p->value.data()[i];
        const double keep = w;
        // Central differences are meaningless across a ReLU switch; such
        // entries are evaluated at a nearby point where the map head stays
        // on one linear piece over the whole stencil.
        bool smooth = false;
        double shift = 0.0;
        for (int tries = 0; tries < 40 && !smooth; ++tries) {
          shift = tries == 0 ? 0.0 : (tries % 2 ? 1.0 : -1.0) * eps * (1.5 + (tries + 1) / 2);
          w = keep + shift + eps;
          const auto above = relu_pattern(model, windows);
          w = keep + shift - eps;
          smooth = above == relu_pattern(model, windows);
        }
        if (!smooth) {
          w = keep;
          ++skipped;
          std::cerr << "gradient check: no smooth stencil near "
                    << nn::attention_mode_name(mode) << ":" << p->name << "[" << i << "]\n";
          continue;
        }
        double analytic = base[p->name].data()[i];
        if (shift != 0.0) {
          ++shifted;
          w = keep + shift;
          model.zero_grad();
          train::batch_loss<double>(model, batch, tc, {}, true);
          analytic = p->grad.data()[i];
        }
        w = keep + shift + eps;
        const double up = train::batch_loss<double>(model, batch, tc, {}, false).total;
        w = keep + shift - eps;
        const double down = train::batch_loss<double>(model, batch, tc, {}, false).total;
        w = keep;
        const double numeric = (up - down) / (2 * eps);
        const double err = std::abs(numeric - analytic) /
                           std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        if (err >= 1e-3 && ++mismatches <= 10) {
          std::cerr << "gradient mismatch " << nn::attention_mode_name(mode) << ":" << p->name
                    << "[" << i << "] analytic " << analytic << " numeric " << numeric << "\n";
        }
        if (err > worst) {
          worst = err;
          worst_at = std::string(nn::attention_mode_name(mode)) + ":" + p->name;
        }
        ++entries;
      }
    }
  }
  const double secs = seconds_since(t0);
  report["gradient_check"] = {{"max_relative_error", worst}, {"worst_entry", worst_at},
                              {"entries", entries}, {"shifted_off_relu_switch", shifted},
                              {"without_smooth_stencil", skipped}, {"seconds", secs}};
  return {worst < 1e-3 && secs < 120.0 && skipped == 0,
          "max rel err " + fmt(worst) + " over " + std::to_string(entries) +
              " entries (4 attention variants, " + std::to_string(shifted) +
              " moved off a ReLU switch), " + fmt(secs) + " s"};
}

// ---- 2: single-view reduction ------------------------------------------------------------

Verdict structural_reduction(json& report) {
  nn::ModelConfig cfg;
  cfg.views = 1;
  cfg.mounts = {1};
  cfg.frames = 4;
  cfg.image_size = 16;
  cfg.patch = 4;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.depth = 2;
  cfg.mlp_ratio = 2;
  cfg.attention = nn::AttentionMode::kJointStv;
  cfg.modality = data::Modality::kRgbd;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    cfg.init_seed = 100 + i;
    nn::CopilotModel<double> model(cfg);
    testing::randomize(model.parameters(), 200 + i, 0.2);
    const auto clip = testing::random_clip(cfg, 1, 300 + i, {1});
    const auto grid = model.features(clip);
    const auto ref = testing::ref_single_stream_backbone(model, clip, 0);
    worst = std::max(worst, (grid.tokens - ref).cwiseAbs().maxCoeff());
  }
  report["structural_reduction"] = {{"max_abs_difference", worst}, {"inputs", 20}};
  return {worst <= 1e-6, "max |joint_stv(V=1) - single-stream reference| = " + fmt(worst) +
                             " over 20 random inputs"};
}

// ---- 4: geometry oracles -----------------------------------------------------------------

Verdict geometry_oracles(json& report) {
  const auto& body = sim::BodyModel::standard();
  const auto unit = testing::fibonacci_sphere(10000);
  Rng rng(2026);
  int compared = 0, agree = 0, excluded = 0;
  for (int i = 0; i < 1000; ++i) {
    const sim::Scene scene = sim::generate_scene(7000 + i % 50);
    const auto& b = scene.bounds;
    sim::Vec3 root(rng.uniform(b.min_x, b.max_x), rng.uniform(b.min_y, b.max_y), 0.95);
    if (i % 2 == 1) {
      const auto& o = scene.obstacles[rng.uniform_int(0, scene.obstacles.size() - 1)];
      const sim::Vec3 q = sim::closest_point(o, root);
      root.x() = q.x() + rng.uniform(-0.4, 0.4);
      root.y() = q.y() + rng.uniform(-0.4, 0.4);
    }
    const auto st = sim::pose_body(body, root, rng.uniform(-3.2, 3.2), rng.uniform(0.0, 6.3));
    const auto oracle = testing::sampling_oracle(scene, st, unit);
    if (oracle.near_band) {
      ++excluded;
      continue;
    }
    ++compared;
    agree += oracle.hit == sim::check_collision(scene, st).has_value();
  }
  const double agreement = compared ? static_cast<double>(agree) / compared : 0.0;

  double worst_depth = 0.0;
  std::size_t rays = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto scene = sim::generate_scene(9000 + s);
    const auto seq = sim::sample_motion(scene, s, 10.0, 20);
    const auto& st = seq.states[seq.size() / 2];
    const auto cams = render::mount_cameras(st, body);
    const auto& cam = cams[s % cams.size()];
    const auto frame = render::render(scene, cam);
    const double focal =
        0.5 * cam.intrinsics.height /
        std::tan(0.5 * cam.intrinsics.vertical_fov_deg * std::numbers::pi / 180.0);
    for (int r = 0; r < frame.height; ++r) {
      for (int c = 0; c < frame.width; ++c) {
        const sim::Vec3 d = cam.forward + ((c + 0.5 - 0.5 * frame.width) / focal) * cam.right -
                            ((r + 0.5 - 0.5 * frame.height) / focal) * cam.up;
        const auto h = testing::naive_hit(scene, cam.position, d);
        worst_depth = std::max(worst_depth,
                               std::abs((h.hit ? h.t : 0.0) - frame.depth[r * frame.width + c]));
        ++rays;
      }
    }
  }
  report["geometry"] = {{"collision_cases", 1000},     {"compared", compared},
                        {"excluded_band", excluded},  {"agreement", agreement},
                        {"depth_scenes", 50},         {"rays", rays},
                        {"max_depth_error_m", worst_depth}};
  return {agreement >= 0.99 && compared >= 900 && worst_depth <= 1e-5,
          "collision agreement " + pct(agreement) + " on " + std::to_string(compared) +
              " cases (" + std::to_string(excluded) + " in the 1 mm band), depth max err " +
              fmt(worst_depth) + " m over 50 scenes"};
}

// ---- 5: loss identities ------------------------------------------------------------------

Verdict loss_identities(json& report) {
  Rng rng(55);
  double kl_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::vector<std::vector<double>> p{random_distribution(rng, 64 * 64)};
    const std::vector<std::uint8_t> valid{1};
    for (auto dir : {train::KlDirection::kPredFirst, train::KlDirection::kTargetFirst}) {
      kl_worst = std::max(kl_worst, std::abs(train::loss_map(p, p, valid, dir).value));
    }
  }
  const double bce_err = std::max(std::abs(train::bce(0.5, 1.0) - std::log(2.0)),
                                  std::abs(train::bce(0.5, 0.0) - std::log(2.0)));

  nn::ModelConfig cfg = nn::ModelConfig::tiny();
  cfg.modality = data::Modality::kRgbd;
  double recombine_worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    cfg.init_seed = 60 + trial;
    nn::Model model(cfg);
    std::vector<data::Window> windows;
    for (int i = 0; i < 4; ++i) windows.push_back(synthetic_window(cfg, rng, i % 2 == 0, i));
    train::TrainConfig tc;
    tc.weights = {rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};
    tc.kl_direction = trial % 2 ? train::KlDirection::kTargetFirst
                                : train::KlDirection::kPredFirst;
    const auto l = train::batch_loss<float>(model, pointers(windows), tc, {}, false);
    const double expect =
        tc.weights.map * l.map + tc.weights.col * l.col + tc.weights.joint * l.joint;
    recombine_worst = std::max(recombine_worst, std::abs(l.total - expect));
  }
  report["loss_identities"] = {{"kl_self_max", kl_worst},
                               {"bce_half_error", bce_err},
                               {"recombination_max_error", recombine_worst}};
  return {kl_worst <= 1e-6 && bce_err <= 1e-6 && recombine_worst <= 1e-6,
          "|KL(p||p)| <= " + fmt(kl_worst) + " (64x64, both directions), |BCE(0.5) - ln 2| = " +
              fmt(bce_err) + ", |total - weighted parts| <= " + fmt(recombine_worst)};
}

// ---- dataset-scale state --------------------------------------------------------------------

struct Options {
  fs::path work = "acceptance_work";
  bool reuse = false;
  std::set<int> only;
};

struct SplitSets {
  std::vector<data::Window> train;
  std::vector<data::Window> val;
  std::vector<data::Window> test;
};

struct TrainedRun {
  nn::Model model;
  double train_seconds = 0.0;
  int best_epoch = 0;
  train::MetricsReport unseen_motion;
  train::MetricsReport unseen_scene;
};

class Harness {
 public:
  explicit Harness(Options opts) : opts_(std::move(opts)) {}

  const Options& options() const { return opts_; }
  fs::path dataset_dir() const { return opts_.work / "dataset_a"; }

  /// Generates the acceptance dataset (twice, for the reproducibility check).
  void generate() {
    if (generated_) return;
    generated_ = true;
    const auto recipe = dataset_recipe();
    if (opts_.reuse && fs::exists(dataset_dir() / "summary.json") &&
        fs::exists(opts_.work / "dataset_b" / "summary.json")) {
      summary_ = json::parse(std::ifstream(dataset_dir() / "summary.json"));
      splits_ = data::splits_from_json(json::parse(std::ifstream(dataset_dir() / "splits.json")));
      datagen_seconds_ = json::parse(std::ifstream(opts_.work / "datagen_seconds.json"))
                             .get<double>();
      return;
    }
    fs::remove_all(dataset_dir());
    fs::remove_all(opts_.work / "dataset_b");
    std::cerr << "generating dataset ...\n";
    auto t0 = Clock::now();
    const auto s = data::generate_dataset(recipe, dataset_dir());
    datagen_seconds_ = seconds_since(t0);
    std::ofstream(opts_.work / "datagen_seconds.json") << datagen_seconds_;
    auto second = recipe;
    second.workers = 1;
    data::generate_dataset(second, opts_.work / "dataset_b");
    summary_ = data::datagen_summary_to_json(s);
    splits_ = s.splits;
  }

  double datagen_seconds() const { return datagen_seconds_; }
  const json& summary() const { return summary_; }
  const data::Splits& splits() const { return splits_; }

  const SplitSets& sets(data::Modality m) {
    generate();
    if (loaded_modality_ != m) {
      sets_ = {};
      data::ReadOptions ro;
      ro.rgb = data::has_rgb(m);
      ro.depth = data::has_depth(m);
      std::cerr << "loading " << data::modality_name(m) << " windows ...\n";
      sets_.train = data::load_split(dataset_dir(), data::kTrainSplit, ro);
      sets_.val = data::load_split(dataset_dir(), data::kUnseenMotionSplit, ro);
      sets_.test = data::load_split(dataset_dir(), data::kUnseenSceneSplit, ro);
      loaded_modality_ = m;
    }
    return sets_;
  }

  const TrainedRun& run(Variant v, std::uint64_t seed) {
    const auto key = std::make_pair(v, seed);
    if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    const auto mc = model_recipe(v, seed);
    const auto tc = train_recipe(v, seed);
    const auto& s = sets(mc.modality);
    const fs::path dir = opts_.work / "models" / (variant_name(v) + "_s" + std::to_string(seed));
    const json meta_key = {{"model", nn::model_config_to_json(mc)},
                           {"train", train::train_config_to_json(tc)},
                           {"dataset", summary_}};

    std::optional<nn::Model> model;
    double secs = 0.0;
    int best = 0;
    if (opts_.reuse && fs::exists(dir / "checkpoint.json")) {
      auto loaded = nn::load_checkpoint(dir);
      if (loaded.meta.value("key", json()) == meta_key) {
        model.emplace(std::move(loaded.model));
        secs = loaded.meta.at("train_seconds").get<double>();
        best = loaded.meta.at("best_epoch").get<int>();
      }
    }
    if (!model) {
      std::cerr << "training " << variant_name(v) << " seed " << seed << " ...\n";
      const auto t0 = Clock::now();
      auto result = [&] {
        if (v != Variant::kRootOnly) return train::train(mc, tc, s.train, s.val);
        return train::train(mc, tc, root_view(s.train, mc), root_view(s.val, mc));
      }();
      secs = seconds_since(t0);
      best = result.best_epoch;
      model.emplace(std::move(result.model));
      fs::create_directories(dir);
      nn::save_checkpoint(*model, dir,
                          {{"key", meta_key}, {"train_seconds", secs}, {"best_epoch", best}});
    }
    TrainedRun r{*model, secs, best, {}, {}};
    r.unseen_motion = evaluate(*model, s.val, data::kUnseenMotionSplit, mc);
    r.unseen_scene = evaluate(*model, s.test, data::kUnseenSceneSplit, mc);
    std::cerr << "  " << variant_name(v) << " seed " << seed << ": unseen_scene col "
              << pct(r.unseen_scene.col_accuracy) << ", F1 " << fmt(r.unseen_scene.f1)
              << ", " << fmt(secs) << " s\n";
    return runs_.emplace(key, std::move(r)).first->second;
  }

 private:
  static std::vector<data::Window> root_view(const std::vector<data::Window>& ws,
                                             const nn::ModelConfig& mc) {
    std::vector<data::Window> out;
    out.reserve(ws.size());
    for (const auto& w : ws) out.push_back(data::select_window_views(w, mc.stream_mounts()));
    return out;
  }

  static train::MetricsReport evaluate(const nn::Model& model,
                                       const std::vector<data::Window>& ws,
                                       const std::string& split, const nn::ModelConfig& mc) {
    if (mc.attention != nn::AttentionMode::kSingleView) return train::evaluate(model, ws, split);
    return train::evaluate(model, root_view(ws, mc), split);
  }

  Options opts_;
  bool generated_ = false;
  double datagen_seconds_ = 0.0;
  json summary_;
  data::Splits splits_;
  std::optional<data::Modality> loaded_modality_;
  SplitSets sets_;
  std::map<std::pair<Variant, std::uint64_t>, TrainedRun> runs_;
};

// ---- 9: reproducibility --------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict reproducibility(Harness& h, json& report) {
  h.generate();
  const fs::path a = h.dataset_dir();
  const fs::path b = h.options().work / "dataset_b";
  std::size_t files = 0, differing = 0;
  std::set<fs::path> seen;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    seen.insert(rel);
    ++files;
    if (!fs::exists(b / rel) || file_bytes(e.path()) != file_bytes(b / rel)) ++differing;
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file() && !seen.count(fs::relative(e.path(), b))) ++differing;
  }

  std::size_t shards = 0, windows = 0, lossy = 0;
  const fs::path scratch = h.options().work / "roundtrip";
  for (const char* split : {data::kTrainSplit, data::kUnseenMotionSplit, data::kUnseenSceneSplit}) {
    for (const auto& dir : data::split_shards(a, split)) {
      const auto first = data::read_shard(dir);
      fs::remove_all(scratch);
      data::write_shard(first, scratch, data::read_manifest(dir).doc.value("config", json()));
      const auto second = data::read_shard(scratch);
      lossy += first != second;
      lossy += file_bytes(dir / "data.bin") != file_bytes(scratch / "data.bin");
      windows += first.size();
      ++shards;
    }
  }
  fs::remove_all(scratch);
  report["reproducibility"] = {{"files_compared", files}, {"files_differing", differing},
                               {"shards_round_tripped", shards}, {"windows", windows},
                               {"lossy_shards", lossy}};
  return {differing == 0 && lossy == 0 && files > 0 && shards > 0,
          std::to_string(files) + " files byte-identical across two runs (" +
              std::to_string(differing) + " differ), " + std::to_string(shards) +
              " shards / " + std::to_string(windows) + " windows round-tripped, " +
              std::to_string(lossy) + " lossy"};
}

// ---- 3: normalisation ----------------------------------------------------------------------

Verdict normalisation(Harness& h, json& report) {
  const auto& full = h.run(Variant::kFull, 0);
  const auto& s = h.sets(data::Modality::kDepth);
  std::size_t annotated = 0, annotated_bad = 0;
  double annotated_worst = 0.0;
  for (const auto* set : {&s.train, &s.val, &s.test}) {
    for (const auto& w : *set) {
      for (int v = 0; v < w.views; ++v) {
        for (int t = 0; t < w.frames; ++t) {
          if (!w.map_is_valid(v, t)) continue;
          const auto hm = w.heatmap(v, t);
          const double err =
              std::abs(std::accumulate(hm.values.begin(), hm.values.end(), 0.0) - 1.0);
          annotated_worst = std::max(annotated_worst, err);
          annotated_bad += err > 1e-5;
          ++annotated;
        }
      }
    }
  }
  std::size_t predicted = 0, predicted_bad = 0;
  double predicted_worst = 0.0;
  for (const auto* set : {&s.val, &s.test}) {
    for (const auto& w : *set) {
      const auto pred = full.model.forward(nn::make_clip(w, data::Modality::kDepth), true);
      for (const auto& m : pred.maps) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < m.size(); ++i) sum += m(i);
        const double err = std::abs(sum - 1.0);
        predicted_worst = std::max(predicted_worst, err);
        predicted_bad += err > 1e-5;
        ++predicted;
      }
    }
  }
  report["normalisation"] = {{"annotated_frames", annotated}, {"annotated_outside", annotated_bad},
                             {"annotated_max_error", annotated_worst},
                             {"predicted_frames", predicted}, {"predicted_outside", predicted_bad},
                             {"predicted_max_error", predicted_worst}};
  return {annotated_bad == 0 && predicted_bad == 0 && annotated >= 10000 && predicted >= 10000,
          std::to_string(predicted) + " predicted and " + std::to_string(annotated) +
              " annotated frames, max |sum - 1| " + fmt(predicted_worst) + " / " +
              fmt(annotated_worst)};
}

// ---- 6: learning signal -------------------------------------------------------------------

Verdict learning_signal(Harness& h, json& report) {
  const auto& full = h.run(Variant::kFull, 0);
  const auto& sum = h.summary().at("splits");
  std::size_t windows = 0;
  for (const auto& [split, s] : sum.items()) windows += s.at("windows").get<std::size_t>();
  const auto& m = full.unseen_scene;
  const double runtime = h.datagen_seconds() + full.train_seconds;
  const bool shape_ok = h.splits().train_scenes.size() >= 20 && windows >= 2000;
  report["learning_signal"] = {
      {"train_scenes", h.splits().train_scenes.size()},
      {"windows", windows},
      {"unseen_scene", train::metrics_to_json(m)},
      {"unseen_motion", train::metrics_to_json(full.unseen_motion)},
      {"datagen_seconds", h.datagen_seconds()},
      {"train_seconds", full.train_seconds},
      {"best_epoch", full.best_epoch}};
  std::cerr << train::metrics_table(std::vector{full.unseen_motion, m}, "full, depth, seed 0");
  return {shape_ok && m.col_accuracy >= 0.70 &&
              m.col_accuracy - m.majority_baseline >= 0.10 && runtime <= 3600.0,
          "unseen-scene Col " + pct(m.col_accuracy) + " vs majority " +
              pct(m.majority_baseline) + " (" + std::to_string(m.windows) + " windows); " +
              std::to_string(windows) + " windows from " +
              std::to_string(h.splits().train_scenes.size()) + " train scenes; " +
              fmt(runtime, 4) + " s datagen + training"};
}

// ---- 7: directional trends ------------------------------------------------------------------------

Verdict trends(Harness& h, json& report) {
  std::map<Variant, double> col, f1;
  json runs = json::array();
  // RGB last so the depth windows are loaded once.
  for (Variant v : kVariants) {
    for (auto seed : kSeeds) {
      const auto& r = h.run(v, seed);
      col[v] += r.unseen_scene.col_accuracy / std::size(kSeeds);
      f1[v] += r.unseen_scene.f1 / std::size(kSeeds);
      runs.push_back({{"variant", variant_name(v)}, {"seed", seed},
                      {"unseen_scene", train::metrics_to_json(r.unseen_scene)},
                      {"unseen_motion", train::metrics_to_json(r.unseen_motion)},
                      {"train_seconds", r.train_seconds}, {"best_epoch", r.best_epoch}});
    }
  }
  const bool a = f1[Variant::kFull] >= f1[Variant::kNoMap];
  const bool b = col[Variant::kFull] >= col[Variant::kRootOnly];
  const bool c = col[Variant::kFull] >= col[Variant::kRgb];
  json means;
  for (Variant v : kVariants) means[variant_name(v)] = {{"col_accuracy", col[v]}, {"f1", f1[v]}};
  report["trends"] = {{"runs", runs}, {"means", means}, {"a", a}, {"b", b}, {"c", c}};
  const auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
  return {a && b && c,
          std::string("(a) F1 full ") + fmt(f1[Variant::kFull]) + " vs no-map " +
              fmt(f1[Variant::kNoMap]) + " " + mark(a) + "; (b) Col all-views " +
              pct(col[Variant::kFull]) + " vs root-only " + pct(col[Variant::kRootOnly]) + " " +
              mark(b) + "; (c) Col depth " + pct(col[Variant::kFull]) + " vs RGB " +
              pct(col[Variant::kRgb]) + " " + mark(c) + " (means over 3 seeds, unseen scenes)"};
}

// ---- 8: controller ----------------------------------------------------------------------------

Verdict controller(Harness& h, json& report) {
  const auto& root = h.run(Variant::kRootOnly, 0);
  const auto recipe = dataset_recipe();
  std::vector<sim::Scene> scenes;
  for (const auto& id : h.splits().unseen_scenes) {
    scenes.push_back(sim::scene_from_json(
        json::parse(std::ifstream(h.dataset_dir() / "scenes" / (id + ".json")))));
  }
  const control::ControlConfig cfg;
  const auto episodes =
      control::build_episodes(scenes, 100, 0, 15, recipe.data.fps, cfg, recipe.motion);
  std::size_t verified = 0;
  for (const auto& e : episodes) {
    const auto it = std::find_if(scenes.begin(), scenes.end(),
                                 [&](const auto& s) { return s.scene_id == e.scene_id; });
    verified += control::verify_episode(*it, e);
  }
  const control::LearnedPolicy learned(root.model, cfg);
  const control::NoOpPolicy noop;
  const int history = root.model.config().frames;
  const auto first = control::evaluate_avoidance(scenes, episodes, learned, cfg, recipe.data,
                                                 history);
  const auto again = control::evaluate_avoidance(scenes, episodes, learned, cfg, recipe.data,
                                                 history);
  const auto none = control::evaluate_avoidance(scenes, episodes, noop, cfg, recipe.data, history);
  const auto logs = [](const control::AvoidanceReport& r) {
    json all = json::array();
    for (const auto& o : r.outcomes) {
      for (const auto& s : o.steps) all.push_back(control::step_log_to_json(s));
    }
    return all;
  };
  const bool deterministic =
      control::avoidance_summary_to_json(first) == control::avoidance_summary_to_json(again) &&
      logs(first) == logs(again);
  report["controller"] = {{"episodes", episodes.size()}, {"verified", verified},
                          {"learned", control::avoidance_summary_to_json(first)},
                          {"noop_rate", none.rate}, {"deterministic", deterministic}};
  return {episodes.size() >= 50 && verified == episodes.size() && first.rate >= 0.15 &&
              none.rate == 0.0 && deterministic,
          "learned " + pct(first.rate) + " (" + std::to_string(first.avoided) + "/" +
              std::to_string(first.episodes) + "), no-op " + pct(none.rate) + ", " +
              std::to_string(verified) + "/" + std::to_string(episodes.size()) +
              " episodes verified, rerun " + (deterministic ? "identical" : "DIFFERS")};
}

}  // namespace
}  // namespace copilot::acceptance

int main(int argc, char** argv) {
  using namespace copilot::acceptance;
  Options opts;
  std::vector<int> only;
  CLI::App app{"COPILOT acceptance run"};
  app.add_option("--work", opts.work, "scratch directory for datasets and checkpoints");
  app.add_flag("--reuse", opts.reuse,
               "reuse a matching dataset and checkpoints from an earlier run");
  app.add_option("--only", only, "criteria to run (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  opts.only = {only.begin(), only.end()};
  fs::create_directories(opts.work);

  Harness harness(opts);
  json report;
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, [&] { return gradient_check(report); }},
      {2, [&] { return structural_reduction(report); }},
      {4, [&] { return geometry_oracles(report); }},
      {5, [&] { return loss_identities(report); }},
      {9, [&] { return reproducibility(harness, report); }},
      {6, [&] { return learning_signal(harness, report); }},
      {3, [&] { return normalisation(harness, report); }},
      {8, [&] { return controller(harness, report); }},
      {7, [&] { return trends(harness, report); }},
  };
  std::map<int, Verdict> verdicts;
  for (const auto& [id, check] : criteria) {
    if (!opts.only.empty() && !opts.only.count(id)) continue;
    const auto t0 = Clock::now();
    try {
      verdicts[id] = check();
    } catch (const std::exception& e) {
      verdicts[id] = {false, std::string("error: ") + e.what()};
    }
    std::cerr << "criterion " << id << " done in " << fmt(seconds_since(t0), 4) << " s\n";
    std::ofstream(opts.work / "acceptance_report.json") << report.dump(2) << "\n";
  }
  bool all = true;
  for (const auto& [id, v] : verdicts) {
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail
              << "\n";
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
