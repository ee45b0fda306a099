// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/dataset/window.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "copilot/common/error.hpp"
#include "copilot/render/raycast.hpp"

namespace copilot::data {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kRgb:
      return "rgb";
    case Modality::kDepth:
      return "depth";
    case Modality::kRgbd:
      return "rgbd";
  }
  return "unknown";
}

Modality modality_from_name(std::string_view name) {
  if (name == "rgb") return Modality::kRgb;
  if (name == "depth") return Modality::kDepth;
  if (name == "rgbd") return Modality::kRgbd;
  throw ConfigError("unknown modality '" + std::string(name) + "'");
}

int modality_channels(Modality m) {
  switch (m) {
    case Modality::kRgb:
      return 3;
    case Modality::kDepth:
      return 1;
    case Modality::kRgbd:
      return 4;
  }
  return 0;
}

bool has_rgb(Modality m) { return m != Modality::kDepth; }
bool has_depth(Modality m) { return m != Modality::kRgb; }

std::vector<int> DatasetConfig::resolved_mounts() const {
  return mounts.empty() ? render::default_mounts(views) : mounts;
}

double DatasetConfig::resolved_sigma() const {
  return sigma_px > 0.0 ? sigma_px : render::default_sigma_px(intrinsics.width);
}

void DatasetConfig::validate() const {
  std::ostringstream err;
  if (frames < 1) err << "frames must be >= 1; ";
  if (horizon < 1) err << "horizon must be >= 1; ";
  if (stride < 1) err << "stride must be >= 1; ";
  if (!(fps > 0.0)) err << "fps must be positive; ";
  if (views < 1 || views > sim::kNumMounts) err << "views must lie in [1, 6]; ";
  if (!mounts.empty() && static_cast<int>(mounts.size()) != views) {
    err << "mount list length must equal views; ";
  }
  for (int m : mounts) {
    if (m < 0 || m >= sim::kNumMounts) err << "unknown mount " << m << "; ";
  }
  if (intrinsics.width < 1 || intrinsics.height < 1) {
    err << "resolution must be positive; ";
  }
  if (!(intrinsics.vertical_fov_deg > 0.0 &&
        intrinsics.vertical_fov_deg < 180.0)) {
    err << "vertical_fov must lie in (0, 180); ";
  }
  if (!err.str().empty()) throw ConfigError("dataset config: " + err.str());
}

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg) {
  std::vector<std::string> mounts;
  for (int m : cfg.resolved_mounts()) mounts.emplace_back(sim::mount_name(m));
  return {
      {"frames", cfg.frames},
      {"horizon", cfg.horizon},
      {"fps", cfg.fps},
      {"stride", cfg.stride},
      {"views", cfg.views},
      {"mounts", mounts},
      {"vertical_fov_deg", cfg.intrinsics.vertical_fov_deg},
      {"width", cfg.intrinsics.width},
      {"height", cfg.intrinsics.height},
      {"modality", modality_name(cfg.modality)},
      {"sigma_px", cfg.resolved_sigma()},
  };
}

DatasetConfig dataset_config_from_json(const nlohmann::json& doc) {
  DatasetConfig cfg;
  auto read = [&](const char* key, auto& field) {
    if (doc.contains(key)) doc.at(key).get_to(field);
  };
  read("frames", cfg.frames);
  read("horizon", cfg.horizon);
  read("fps", cfg.fps);
  read("stride", cfg.stride);
  read("views", cfg.views);
  read("vertical_fov_deg", cfg.intrinsics.vertical_fov_deg);
  read("width", cfg.intrinsics.width);
  read("height", cfg.intrinsics.height);
  read("sigma_px", cfg.sigma_px);
  if (doc.contains("modality")) {
    cfg.modality = modality_from_name(doc.at("modality").get<std::string>());
  }
  if (doc.contains("mounts")) {
    cfg.mounts.clear();
    for (const auto& name : doc.at("mounts")) {
      const int m = sim::mount_from_name(name.get<std::string>());
      if (m < 0) throw ConfigError("unknown mount '" + name.get<std::string>() + "'");
      cfg.mounts.push_back(m);
    }
    if (!doc.contains("views")) cfg.views = static_cast<int>(cfg.mounts.size());
  }
  cfg.validate();
  return cfg;
}

std::ptrdiff_t Window::map_offset(int v, int t) const {
  const int idx = v * frames + t;
  if (!map_valid[idx]) return -1;
  std::ptrdiff_t n = 0;
  for (int i = 0; i < idx; ++i) n += map_valid[i] ? 1 : 0;
  return n * static_cast<std::ptrdiff_t>(pixels());
}

render::Heatmap Window::heatmap(int v, int t) const {
  render::Heatmap map;
  map.width = width;
  map.height = height;
  map.values.assign(pixels(), 0.0f);
  const auto off = map_offset(v, t);
  if (off >= 0) {
    std::copy_n(y_map.begin() + off, pixels(), map.values.begin());
    map.valid = true;
  }
  return map;
}

std::string validate_window(const Window& w) {
  bool any_joint = false;
  for (bool j : w.y_joint) any_joint = any_joint || j;
  if (w.y_col != any_joint) return "y_col disagrees with OR(y_joint)";
  if (w.map_valid.size() != static_cast<std::size_t>(w.views * w.frames)) {
    return "map_valid has the wrong size";
  }
  std::size_t n_valid = 0;
  for (auto v : w.map_valid) n_valid += v ? 1 : 0;
  if (!w.y_col && n_valid != 0) return "negative window carries heatmaps";
  if (w.y_map.size() != n_valid * w.pixels()) return "y_map has the wrong size";
  for (std::size_t k = 0; k < n_valid; ++k) {
    double sum = 0.0;
    for (std::size_t p = 0; p < w.pixels(); ++p) {
      const float x = w.y_map[k * w.pixels() + p];
      if (x < 0.0f) return "negative heatmap value";
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-5) return "heatmap does not sum to one";
  }
  const std::size_t frames_px =
      static_cast<std::size_t>(w.views) * w.frames * w.pixels();
  if (!w.rgb.empty() && w.rgb.size() != 3 * frames_px) return "rgb has the wrong size";
  if (!w.depth.empty() && w.depth.size() != frames_px) return "depth has the wrong size";
  return {};
}

std::vector<WindowLabel> window_labels(const sim::MotionSequence& seq,
                                       const DatasetConfig& cfg) {
  std::vector<WindowLabel> out;
  const int n = seq.size();
  const int T = cfg.frames;
  const int H = cfg.horizon;
  if (seq.terminal_event) {
    const int c = seq.terminal_event->timestep;
    for (int s = 0; s + T <= c; s += cfg.stride) {
      out.push_back({s, c >= s + T && c < s + T + H});
    }
  } else {
    for (int s = 0; s + T + H <= n; s += cfg.stride) {
      out.push_back({s, false});
    }
  }
  return out;
}

std::vector<Window> slice_windows(const sim::MotionSequence& seq,
                                  const sim::Scene& scene,
                                  const DatasetConfig& cfg,
                                  std::string_view sequence_id,
                                  const sim::BodyModel& model) {
  cfg.validate();
  const auto labels = window_labels(seq, cfg);
  const auto mounts = cfg.resolved_mounts();
  const int V = static_cast<int>(mounts.size());
  const int T = cfg.frames;
  const int W = cfg.intrinsics.width;
  const int Hh = cfg.intrinsics.height;
  const std::size_t px = static_cast<std::size_t>(W) * Hh;
  const double sigma = cfg.resolved_sigma();

  std::map<int, std::vector<render::Camera>> cameras;
  std::map<int, std::vector<render::EgoFrame>> rendered;
  auto frame_cameras = [&](int f) -> const std::vector<render::Camera>& {
    auto it = cameras.find(f);
    if (it == cameras.end()) {
      it = cameras
               .emplace(f, render::mount_cameras(seq.states[f], model, mounts,
                                                 cfg.intrinsics))
               .first;
    }
    return it->second;
  };
  auto frame_images = [&](int f) -> const std::vector<render::EgoFrame>& {
    auto it = rendered.find(f);
    if (it == rendered.end()) {
      std::vector<render::EgoFrame> imgs;
      for (const auto& cam : frame_cameras(f)) {
        imgs.push_back(render::render(scene, cam));
      }
      it = rendered.emplace(f, std::move(imgs)).first;
    }
    return it->second;
  };

  std::vector<Window> windows;
  for (const auto& label : labels) {
    Window w;
    w.window_id = std::string(sequence_id) + "/" + std::to_string(label.start);
    w.scene_id = scene.scene_id;
    w.modality = cfg.modality;
    w.views = V;
    w.frames = T;
    w.height = Hh;
    w.width = W;
    w.mounts = mounts;
    if (has_rgb(cfg.modality)) w.rgb.resize(3 * V * T * px);
    if (has_depth(cfg.modality)) w.depth.resize(V * T * px);
    for (int t = 0; t < T; ++t) {
      const auto& imgs = frame_images(label.start + t);
      for (int v = 0; v < V; ++v) {
        const std::size_t base = (static_cast<std::size_t>(v) * T + t) * px;
        if (has_rgb(cfg.modality)) {
          for (std::size_t i = 0; i < 3 * px; ++i) {
            w.rgb[3 * base + i] =
                static_cast<std::uint8_t>(std::lround(imgs[v].rgb[i] * 255.0f));
          }
        }
        if (has_depth(cfg.modality)) {
          std::copy(imgs[v].depth.begin(), imgs[v].depth.end(),
                    w.depth.begin() + base);
        }
      }
    }

    w.map_valid.assign(V * T, 0);
    w.y_col = label.y_col;
    if (label.y_col) {
      const auto& event = *seq.terminal_event;
      w.y_joint = event.colliding_joints;
      for (int v = 0; v < V; ++v) {
        for (int t = 0; t < T; ++t) {
          const auto map = render::annotate_heatmap(
              event.contact_points, frame_cameras(label.start + t)[v], sigma);
          if (!map.valid) continue;
          w.map_valid[v * T + t] = 1;
          w.y_map.insert(w.y_map.end(), map.values.begin(), map.values.end());
        }
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

Window select_window_views(const Window& w, std::span<const int> mounts) {
  Window out = w;
  out.views = static_cast<int>(mounts.size());
  out.mounts.assign(mounts.begin(), mounts.end());
  out.rgb.clear();
  out.depth.clear();
  out.map_valid.clear();
  out.y_map.clear();
  const std::size_t frame_px = w.pixels();
  const std::size_t per_view = frame_px * w.frames;
  for (int m : mounts) {
    const auto it = std::find(w.mounts.begin(), w.mounts.end(), m);
    if (it == w.mounts.end()) {
      throw ContractViolation("window " + w.window_id + " has no view for mount " +
                              std::to_string(m));
    }
    const auto v = static_cast<int>(it - w.mounts.begin());
    if (!w.rgb.empty()) {
      out.rgb.insert(out.rgb.end(), w.rgb.begin() + v * per_view * 3,
                     w.rgb.begin() + (v + 1) * per_view * 3);
    }
    if (!w.depth.empty()) {
      out.depth.insert(out.depth.end(), w.depth.begin() + v * per_view,
                       w.depth.begin() + (v + 1) * per_view);
    }
    for (int t = 0; t < w.frames; ++t) {
      const bool valid = w.map_is_valid(v, t);
      out.map_valid.push_back(valid ? 1 : 0);
      if (valid) {
        const auto off = w.map_offset(v, t);
        out.y_map.insert(out.y_map.end(), w.y_map.begin() + off,
                         w.y_map.begin() + off + static_cast<std::ptrdiff_t>(frame_px));
      }
    }
  }
  return out;
}

}  // namespace copilot::data
