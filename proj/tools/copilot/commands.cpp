// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <variant>

#include "copilot/common/error.hpp"
#include "copilot/control/controller.hpp"
#include "copilot/dataset/generate.hpp"
#include "copilot/model/checkpoint.hpp"
#include "copilot/model/clip.hpp"
#include "copilot/train/trainer.hpp"
#include "png_io.hpp"

namespace copilot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

void write_run_config(const fs::path& dir, const json& rc) {
  fs::create_directories(dir);
  write_json_file(dir / "run_config.json", rc);
}

/// Every object key of `given` must exist in `known`.
void check_keys(const json& given, const json& known, const std::string& at) {
  if (!given.is_object() || !known.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown config key " + at + "/" + key);
    }
    check_keys(value, known.at(key), at + "/" + key);
  }
}

fs::path required_path(const json& rc, const char* key) {
  const auto value = rc.at(key).get<std::string>();
  if (value.empty()) {
    throw ConfigError(std::string("missing required setting '") + key + "'");
  }
  return value;
}

fs::path output_dir(const json& rc) { return required_path(rc, "out"); }

data::DatagenConfig dataset_recipe(const fs::path& root) {
  const fs::path file = root / "config.json";
  if (!fs::exists(file)) {
    throw Error("dataset config not found: " + file.string());
  }
  return data::datagen_config_from_json(read_json_file(file));
}

std::vector<data::Window> load_windows(const fs::path& root,
                                       const std::string& split,
                                       const data::ReadOptions& opts,
                                       const std::vector<int>& mounts) {
  if (data::split_shards(root, split).empty()) {
    throw Error("no shards for split '" + split + "' under " + root.string());
  }
  auto windows = data::load_split(root, split, opts);
  for (auto& w : windows) {
    if (w.mounts != mounts) w = data::select_window_views(w, mounts);
  }
  return windows;
}

data::ReadOptions read_options(data::Modality m, bool maps) {
  data::ReadOptions opts;
  opts.rgb = data::has_rgb(m);
  opts.depth = data::has_depth(m);
  opts.maps = maps;
  return opts;
}

/// Views a model reads from stored windows.
std::vector<int> model_mounts(const nn::ModelConfig& cfg) {
  return cfg.attention == nn::AttentionMode::kSingleView ? cfg.stream_mounts()
                                                         : cfg.resolved_mounts();
}

void check_model_against_data(const nn::ModelConfig& m,
                              const data::DatasetConfig& d) {
  if (m.frames != d.frames) {
    throw ConfigError("model frames " + std::to_string(m.frames) +
                      " differ from dataset frames " + std::to_string(d.frames));
  }
  if (m.image_size != d.intrinsics.width || m.image_size != d.intrinsics.height) {
    throw ConfigError("model image_size " + std::to_string(m.image_size) +
                      " does not match the dataset frames");
  }
  const auto have = d.resolved_mounts();
  for (int mount : model_mounts(m)) {
    if (std::find(have.begin(), have.end(), mount) == have.end()) {
      throw ConfigError("dataset has no camera at mount " +
                        std::to_string(mount));
    }
  }
}

std::vector<sim::Scene> load_scenes(const fs::path& root,
                                    const std::vector<std::string>& ids) {
  std::vector<sim::Scene> scenes;
  for (const auto& id : ids) {
    scenes.push_back(
        sim::scene_from_json(read_json_file(root / "scenes" / (id + ".json"))));
  }
  return scenes;
}

std::string format_seconds(double s) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << s << " s";
  return out.str();
}

}  // namespace

json default_run_config(std::string_view command) {
  json rc = {{"command", std::string(command)}, {"seed", 0}, {"out", ""}};
  if (command == "datagen") {
    rc["workers"] = 0;
    rc["datagen"] = data::datagen_config_to_json(data::DatagenConfig{});
  } else if (command == "train") {
    rc["data"] = "";
    rc["train_split"] = data::kTrainSplit;
    rc["val_split"] = data::kUnseenMotionSplit;
    rc["model"] = nn::model_config_to_json(nn::ModelConfig{});
    rc["train"] = train::train_config_to_json(train::TrainConfig{});
  } else if (command == "eval") {
    rc["workers"] = 0;
    rc["data"] = "";
    rc["checkpoint"] = "";
    rc["splits"] = {data::kUnseenMotionSplit, data::kUnseenSceneSplit};
  } else if (command == "control") {
    rc["workers"] = 0;
    rc["data"] = "";
    rc["checkpoint"] = "";
    rc["policy"] = "learned";
    rc["split"] = data::kUnseenSceneSplit;
    rc["episodes"] = 50;
    rc["min_frame"] = 15;
    rc["oracle_lookahead"] = 15;
    rc["control"] = control::control_config_to_json(control::ControlConfig{});
  } else if (command == "viz") {
    rc["data"] = "";
    rc["split"] = data::kUnseenSceneSplit;
    rc["window"] = "";
    rc["checkpoint"] = "";
    rc["log"] = "";
    rc["scene"] = "";
    rc["scale"] = 4;
  } else {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }
  return rc;
}

json resolve_run_config(std::string_view command, const fs::path& config_file,
                        const std::vector<Override>& overrides) {
  json rc = default_run_config(command);
  const json defaults = rc;
  if (!config_file.empty()) {
    json file = read_json_file(config_file);
    if (!file.is_object()) {
      throw ConfigError(config_file.string() + ": expected a JSON object");
    }
    if (file.contains("command") && file["command"] != rc["command"]) {
      throw ConfigError(config_file.string() + " is a '" +
                        file["command"].get<std::string>() +
                        "' config, not '" + std::string(command) + "'");
    }
    check_keys(file, defaults, "");
    rc.merge_patch(file);
  }
  for (const auto& [pointer, value] : overrides) {
    try {
      rc[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
      throw ConfigError("cannot apply override " + pointer + ": " + e.what());
    }
  }

  try {
    const auto seed = rc.at("seed").get<std::uint64_t>();
    if (command == "datagen") {
      auto cfg = data::datagen_config_from_json(rc.at("datagen"));
      cfg.seed = seed;
      if (cfg.scenes < 1) throw ConfigError("datagen needs at least one scene");
      cfg.data.validate();
      rc["datagen"] = data::datagen_config_to_json(cfg);
      if (rc.at("workers").get<int>() < 0) throw ConfigError("workers must be >= 0");
    } else if (command == "train") {
      auto model = nn::model_config_from_json(rc.at("model"));
      model.init_seed = seed;
      model.validate();
      auto tc = train::train_config_from_json(rc.at("train"));
      tc.seed = seed;
      tc.validate();
      rc["model"] = nn::model_config_to_json(model);
      rc["train"] = train::train_config_to_json(tc);
    } else if (command == "eval") {
      if (!rc.at("splits").is_array() || rc.at("splits").empty()) {
        throw ConfigError("eval needs a non-empty list of splits");
      }
    } else if (command == "control") {
      auto cc = control::control_config_from_json(rc.at("control"));
      cc.validate();
      rc["control"] = control::control_config_to_json(cc);
      const auto policy = rc.at("policy").get<std::string>();
      if (policy != "learned" && policy != "noop" && policy != "oracle") {
        throw ConfigError("unknown policy '" + policy +
                          "' (expected learned, noop or oracle)");
      }
      if (rc.at("episodes").get<int>() < 1) {
        throw ConfigError("episodes must be >= 1");
      }
    } else if (command == "viz") {
      if (rc.at("scale").get<int>() < 1) throw ConfigError("scale must be >= 1");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
  return rc;
}

void run_datagen(const json& rc, std::ostream& log) {
  const fs::path out = output_dir(rc);
  auto cfg = data::datagen_config_from_json(rc.at("datagen"));
  cfg.workers = rc.at("workers").get<int>();
  write_run_config(out, rc);
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = data::generate_dataset(cfg, out);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log << "datagen: " << cfg.scenes << " scenes in "
      << format_seconds(secs) << "\n";
  for (const auto& [split, s] : summary.per_split) {
    const double frac = s.windows ? double(s.positives) / s.windows : 0.0;
    log << "  " << split << ": " << s.windows << " windows, " << s.positives
        << " positive (" << std::lround(100.0 * frac) << "%), "
        << s.sequences << " sequences\n";
  }
}

void run_train(const json& rc, std::ostream& log) {
  const fs::path out = output_dir(rc);
  const fs::path root = required_path(rc, "data");
  const auto model_cfg = nn::model_config_from_json(rc.at("model"));
  const auto tc = train::train_config_from_json(rc.at("train"));
  const auto recipe = dataset_recipe(root);
  check_model_against_data(model_cfg, recipe.data);

  const auto opts = read_options(model_cfg.modality, tc.weights.map > 0.0);
  const auto mounts = model_mounts(model_cfg);
  const auto train_set =
      load_windows(root, rc.at("train_split").get<std::string>(), opts, mounts);
  std::vector<data::Window> val_set;
  const auto val_split = rc.at("val_split").get<std::string>();
  if (!val_split.empty()) val_set = load_windows(root, val_split, opts, mounts);
  log << "train: " << train_set.size() << " windows, validation "
      << val_set.size() << "\n";

  write_run_config(out, rc);
  json history = json::array();
  auto result = train::train(
      model_cfg, tc, train_set, val_set, [&](const train::EpochRecord& r) {
        const auto j = train::epoch_record_to_json(r);
        history.push_back(j);
        log << "epoch " << r.epoch << ": train " << r.train.total;
        if (r.val) log << ", val " << r.val->total;
        log << (r.best ? " *" : "") << "\n";
      });
  const fs::path ckpt = out / "checkpoint";
  write_run_config(ckpt, rc);
  nn::save_checkpoint(result.model, ckpt,
                      {{"best_epoch", result.best_epoch}, {"run_config", rc}});
  write_json_file(out / "history.json",
                  {{"best_epoch", result.best_epoch}, {"epochs", history}});
  log << "best epoch " << result.best_epoch << ", checkpoint " << ckpt.string()
      << "\n";
}

void run_eval(const json& rc, std::ostream& log) {
  const fs::path out = output_dir(rc);
  const fs::path root = required_path(rc, "data");
  const fs::path ckpt = required_path(rc, "checkpoint");
  const auto loaded = nn::load_checkpoint(ckpt);
  const auto& model_cfg = loaded.model.config();
  check_model_against_data(model_cfg, dataset_recipe(root).data);

  const auto opts = read_options(model_cfg.modality, false);
  const auto mounts = model_mounts(model_cfg);
  std::vector<train::MetricsReport> reports;
  json splits = json::array();
  for (const auto& s : rc.at("splits")) {
    const auto split = s.get<std::string>();
    const auto windows = load_windows(root, split, opts, mounts);
    reports.push_back(train::evaluate(loaded.model, windows, split,
                                      rc.at("workers").get<int>()));
    splits.push_back(train::metrics_to_json(reports.back()));
  }
  write_run_config(out, rc);
  write_json_file(out / "metrics.json",
                  {{"checkpoint", ckpt.string()},
                   {"model", nn::model_config_to_json(model_cfg)},
                   {"splits", splits}});
  const std::string title =
      std::string(nn::attention_mode_name(model_cfg.attention)) + ", " +
      std::string(data::modality_name(model_cfg.modality));
  const std::string table = train::metrics_table(reports, title);
  std::ofstream(out / "metrics.txt") << table;
  log << table;
}

void run_control(const json& rc, std::ostream& log) {
  const fs::path out = output_dir(rc);
  const fs::path root = required_path(rc, "data");
  const auto recipe = dataset_recipe(root);
  const auto cfg = control::control_config_from_json(rc.at("control"));
  const auto split = rc.at("split").get<std::string>();
  const auto splits = data::splits_from_json(read_json_file(root / "splits.json"));
  const auto& ids = split == data::kUnseenSceneSplit ? splits.unseen_scenes
                                                     : splits.train_scenes;
  if (ids.empty()) throw Error("split '" + split + "' has no scenes");
  const auto scenes = load_scenes(root, ids);

  const auto policy_name = rc.at("policy").get<std::string>();
  std::optional<nn::LoadedCheckpoint> loaded;
  std::unique_ptr<control::Policy> policy;
  int history = recipe.data.frames;
  if (policy_name == "learned") {
    loaded = nn::load_checkpoint(required_path(rc, "checkpoint"));
    check_model_against_data(loaded->model.config(), recipe.data);
    policy = std::make_unique<control::LearnedPolicy>(loaded->model, cfg);
    history = loaded->model.config().frames;
  } else if (policy_name == "oracle") {
    policy = std::make_unique<control::OraclePolicy>(
        cfg, rc.at("oracle_lookahead").get<int>());
  } else {
    policy = std::make_unique<control::NoOpPolicy>();
  }

  const auto episodes = control::build_episodes(
      scenes, rc.at("episodes").get<int>(), rc.at("seed").get<std::uint64_t>(),
      rc.at("min_frame").get<int>(), recipe.data.fps, cfg, recipe.motion);
  json episodes_doc = json::array();
  for (const auto& e : episodes) {
    const auto scene = std::find_if(scenes.begin(), scenes.end(), [&](auto& s) {
      return s.scene_id == e.scene_id;
    });
    if (!control::verify_episode(*scene, e)) {
      throw Error("episode " + e.episode_id + " failed verification");
    }
    episodes_doc.push_back(control::episode_to_json(e));
  }
  const auto report = control::evaluate_avoidance(
      scenes, episodes, *policy, cfg, recipe.data, history,
      rc.at("workers").get<int>());

  write_run_config(out, rc);
  write_run_config(out / "logs", rc);
  write_json_file(out / "episodes.json", episodes_doc);
  json summary = control::avoidance_summary_to_json(report);
  summary["split"] = split;
  write_json_file(out / "summary.json", summary);
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    const auto& o = report.outcomes[i];
    std::ofstream f(out / "logs" / (e.episode_id + ".jsonl"));
    for (const auto& s : o.steps) {
      json line = control::step_log_to_json(s);
      line["episode_id"] = e.episode_id;
      line["scene_id"] = e.scene_id;
      f << line.dump() << '\n';
    }
    const auto& p = o.trajectory.back();
    f << json{{"episode_id", e.episode_id},
              {"scene_id", e.scene_id},
              {"frame", o.frames},
              {"position", {p.x(), p.y(), p.z()}},
              {"yaw", o.yaws.back()},
              {"terminal", true},
              {"collided", o.collided}}
             .dump()
      << '\n';
    if (!f) throw Error("cannot write log for " + e.episode_id);
  }
  log << "control (" << policy_name << ", " << split << "): avoided "
      << report.avoided << " of " << report.episodes << " episodes ("
      << 100.0 * report.rate << "%)\n";
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

/// Gray level of pixel i of view v, frame t.
double frame_intensity(const data::Window& w, int v, int t, std::size_t i) {
  const std::size_t frame = static_cast<std::size_t>(v) * w.frames + t;
  if (!w.rgb.empty()) {
    const std::uint8_t* px = &w.rgb[(frame * w.pixels() + i) * 3];
    return (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
  }
  const float d = w.depth[frame * w.pixels() + i];
  return 1.0 - std::min<double>(d, nn::kDepthNormalization) /
                   nn::kDepthNormalization;
}

Image overlay(const data::Window& w, int v, int t, std::span<const double> heat,
              int scale) {
  const double peak = *std::max_element(heat.begin(), heat.end());
  Image img(w.width * scale, w.height * scale);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i =
          static_cast<std::size_t>(y / scale) * w.width + x / scale;
      const std::uint8_t g = to_byte(frame_intensity(w, v, t, i));
      std::uint8_t* px = img.at(x, y);
      px[0] = to_byte(peak > 0.0 ? heat[i] / peak : 0.0);
      px[1] = g;
      px[2] = g;
    }
  }
  return img;
}

std::optional<data::Window> find_window(const fs::path& root,
                                        const std::string& split,
                                        const std::string& id) {
  for (const auto& dir : data::split_shards(root, split)) {
    const auto manifest = data::read_manifest(dir);
    for (const auto& entry : manifest.doc.at("windows")) {
      if (entry.at("window_id") == id) {
        for (auto& w : data::read_shard(dir)) {
          if (w.window_id == id) return w;
        }
      }
    }
  }
  return std::nullopt;
}

void viz_window(const json& rc, const fs::path& out, std::ostream& log) {
  const fs::path root = required_path(rc, "data");
  const auto id = rc.at("window").get<std::string>();
  const auto split = rc.at("split").get<std::string>();
  const int scale = rc.at("scale").get<int>();
  auto found = find_window(root, split, id);
  if (!found) throw Error("window " + id + " not found in split " + split);
  data::Window w = std::move(*found);

  std::optional<nn::Predictions<float>> pred;
  if (!rc.at("checkpoint").get<std::string>().empty()) {
    const auto loaded = nn::load_checkpoint(required_path(rc, "checkpoint"));
    const auto& mc = loaded.model.config();
    w = data::select_window_views(w, model_mounts(mc));
    pred = loaded.model.forward(nn::make_clip(w, mc.modality), true);
  }
  std::string dirname = "window_" + id;
  std::replace(dirname.begin(), dirname.end(), '/', '_');
  const fs::path dir = out / dirname;
  write_run_config(dir, rc);
  int written = 0;
  std::vector<double> heat(w.pixels());
  for (int v = 0; v < w.views; ++v) {
    for (int t = 0; t < w.frames; ++t) {
      const std::string name = "v" + std::to_string(v) + "_" +
                               std::string(sim::mount_name(w.mounts[v])) + "_t" +
                               std::to_string(t);
      if (pred) {
        const auto sv = std::find(pred->view_index.begin(),
                                  pred->view_index.end(), v);
        if (sv == pred->view_index.end()) continue;
        const auto& m = pred->map(static_cast<int>(sv - pred->view_index.begin()), t);
        for (std::size_t i = 0; i < heat.size(); ++i) heat[i] = m[i];
      } else {
        if (!w.map_is_valid(v, t)) {
          log << "notice: " << name << " has no annotated heatmap, skipped\n";
          continue;
        }
        const auto h = w.heatmap(v, t);
        heat.assign(h.values.begin(), h.values.end());
      }
      write_png(dir / (name + ".png"), overlay(w, v, t, heat, scale));
      ++written;
    }
  }
  log << "viz: " << written << " overlays in " << dir.string() << "\n";
}

struct LogPoint {
  double x = 0.0;
  double y = 0.0;
  bool acted = false;
};

struct EpisodeLog {
  std::string episode_id;
  std::string scene_id;
  std::vector<LogPoint> points;
  bool collided = false;
};

EpisodeLog parse_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  EpisodeLog log;
  std::string line;
  int number = 0;
  bool terminal = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (log.episode_id.empty()) {
        log.episode_id = j.at("episode_id").get<std::string>();
        log.scene_id = j.at("scene_id").get<std::string>();
      }
      const auto& p = j.at("position");
      LogPoint pt{p.at(0).get<double>(), p.at(1).get<double>(), false};
      if (j.value("terminal", false)) {
        terminal = true;
        log.collided = j.at("collided").get<bool>();
      } else {
        pt.acted = j.at("action").get<std::string>() != "none";
      }
      log.points.push_back(pt);
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) +
                        ": malformed log line: " + e.what());
    }
  }
  if (log.points.empty() || !terminal) {
    throw ConfigError(path.string() + ": malformed log (no terminal record)");
  }
  return log;
}

void fill_disc(Image& img, double cx, double cy, double r,
               const std::array<std::uint8_t, 3>& c) {
  for (int y = std::max(0, int(cy - r)); y <= std::min(img.height - 1, int(cy + r)); ++y) {
    for (int x = std::max(0, int(cx - r)); x <= std::min(img.width - 1, int(cx + r)); ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
        std::copy(c.begin(), c.end(), img.at(x, y));
      }
    }
  }
}

Image trajectory_plot(const sim::Scene& scene, const EpisodeLog& ep) {
  constexpr int kSize = 512;
  constexpr double kMargin = 0.2;
  const auto& b = scene.bounds;
  const double span = std::max(b.width(), b.depth()) + 2 * kMargin;
  const double ppm = kSize / span;
  // +x to the right, +y up.
  const auto px = [&](double x) { return (x - b.min_x + kMargin) * ppm; };
  const auto py = [&](double y) { return kSize - (y - b.min_y + kMargin) * ppm; };

  Image img(kSize, kSize);
  std::fill(img.rgb.begin(), img.rgb.end(), std::uint8_t{255});
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      const double wx = x / ppm + b.min_x - kMargin;
      const double wy = (kSize - y) / ppm + b.min_y - kMargin;
      std::uint8_t* p = img.at(x, y);
      if (!b.contains(wx, wy)) {
        std::fill(p, p + 3, std::uint8_t{60});
        continue;
      }
      for (const auto& o : scene.obstacles) {
        const bool inside = std::visit(
            [&](const auto& s) {
              using T = std::decay_t<decltype(s)>;
              if constexpr (std::is_same_v<T, sim::Box>) {
                return wx >= s.min.x() && wx <= s.max.x() && wy >= s.min.y() &&
                       wy <= s.max.y();
              } else {
                return (sim::Vec2(wx, wy) - s.center).norm() <= s.radius;
              }
            },
            o.shape);
        if (inside) {
          for (int c = 0; c < 3; ++c) p[c] = to_byte(0.4 + 0.4 * o.albedo[c]);
        }
      }
    }
  }
  for (std::size_t i = 1; i < ep.points.size(); ++i) {
    const auto& a = ep.points[i - 1];
    const auto& c = ep.points[i];
    for (int k = 0; k <= 16; ++k) {
      const double f = k / 16.0;
      fill_disc(img, px(a.x + f * (c.x - a.x)), py(a.y + f * (c.y - a.y)), 1.5,
                {30, 30, 200});
    }
  }
  for (const auto& p : ep.points) {
    if (p.acted) fill_disc(img, px(p.x), py(p.y), 3.0, {240, 140, 0});
  }
  fill_disc(img, px(ep.points.front().x), py(ep.points.front().y), 5.0,
            {0, 170, 0});
  const std::array<std::uint8_t, 3> end_colour =
      ep.collided ? std::array<std::uint8_t, 3>{220, 0, 0}
                  : std::array<std::uint8_t, 3>{0, 120, 255};
  fill_disc(img, px(ep.points.back().x), py(ep.points.back().y), 5.0, end_colour);
  return img;
}

void viz_logs(const json& rc, const fs::path& out, std::ostream& log) {
  const fs::path source = rc.at("log").get<std::string>();
  std::vector<fs::path> files;
  if (fs::is_directory(source)) {
    for (const auto& entry : fs::directory_iterator(source)) {
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(source);
  }
  if (files.empty()) throw Error("no episode logs in " + source.string());
  std::vector<EpisodeLog> logs;
  for (const auto& f : files) logs.push_back(parse_log(f));

  write_run_config(out, rc);
  for (const auto& ep : logs) {
    fs::path scene_file = rc.at("scene").get<std::string>();
    if (scene_file.empty()) {
      scene_file = required_path(rc, "data") / "scenes" / (ep.scene_id + ".json");
    }
    const auto scene = sim::scene_from_json(read_json_file(scene_file));
    const fs::path png = out / ("trajectory_" + ep.episode_id + ".png");
    write_png(png, trajectory_plot(scene, ep));
    log << "viz: " << png.string() << "\n";
  }
}

}  // namespace

void run_viz(const json& rc, std::ostream& log) {
  const fs::path out = output_dir(rc);
  const bool window = !rc.at("window").get<std::string>().empty();
  const bool logs = !rc.at("log").get<std::string>().empty();
  if (!window && !logs) {
    throw ConfigError("viz needs a window id (--window) or an episode log (--log)");
  }
  if (logs) viz_logs(rc, out, log);
  if (window) viz_window(rc, out, log);
  write_run_config(out, rc);
}

void run_command(const json& rc, std::ostream& log) {
  const auto command = rc.at("command").get<std::string>();
  if (command == "datagen") return run_datagen(rc, log);
  if (command == "train") return run_train(rc, log);
  if (command == "eval") return run_eval(rc, log);
  if (command == "control") return run_control(rc, log);
  if (command == "viz") return run_viz(rc, log);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace copilot::cli
