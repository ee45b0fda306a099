// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/dataset/shard.hpp"

#include <fstream>

namespace copilot::data {
namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kDataName = "data.bin";
constexpr const char* kFormatName = "copilot-shard";

std::uint32_t u32(int v) { return static_cast<std::uint32_t>(v); }

}  // namespace

std::size_t ShardManifest::window_count() const {
  return doc.at("windows").size();
}

std::size_t ShardManifest::positive_count() const {
  std::size_t n = 0;
  for (const auto& w : doc.at("windows")) n += w.at("y_col").get<bool>() ? 1 : 0;
  return n;
}

ShardManifest write_shard(std::span<const Window> windows,
                          const std::filesystem::path& dir,
                          const nlohmann::json& config_echo) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ShardError(ShardErrorCode::kIo,
                     "cannot create " + dir.string() + ": " + ec.message());
  }
  ContainerWriter writer(dir / kDataName);
  nlohmann::json entries = nlohmann::json::array();
  std::size_t positives = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    if (auto problem = validate_window(w); !problem.empty()) {
      throw ContractViolation("write_shard: window '" + w.window_id +
                              "' is invalid: " + problem);
    }
    const std::string prefix = std::to_string(i) + "/";
    nlohmann::json tensors = nlohmann::json::object();
    auto put = [&](const std::string& name, const Tensor& t) {
      tensors[name] = record_to_json(writer.append(prefix + name, t));
    };
    const std::vector<std::uint32_t> frame_dims = {u32(w.views), u32(w.frames),
                                                   u32(w.height), u32(w.width)};
    if (!w.rgb.empty()) {
      auto dims = frame_dims;
      dims.push_back(3);
      put("rgb", Tensor::u8(dims, w.rgb));
    }
    if (!w.depth.empty()) put("depth", Tensor::f32(frame_dims, w.depth));
    const std::uint8_t y_col = w.y_col ? 1 : 0;
    put("y_col", Tensor::boolean({1}, std::span(&y_col, 1)));
    std::vector<std::uint8_t> joints(w.y_joint.begin(), w.y_joint.end());
    put("y_joint", Tensor::boolean({u32(sim::kNumJoints)}, joints));
    put("map_valid", Tensor::boolean({u32(w.views), u32(w.frames)}, w.map_valid));
    const auto n_valid = w.pixels() ? w.y_map.size() / w.pixels() : 0;
    put("y_map", Tensor::f32({static_cast<std::uint32_t>(n_valid),
                              u32(w.height), u32(w.width)},
                             w.y_map));
    positives += w.y_col ? 1 : 0;
    entries.push_back({
        {"window_id", w.window_id},
        {"scene_id", w.scene_id},
        {"modality", modality_name(w.modality)},
        {"views", w.views},
        {"frames", w.frames},
        {"height", w.height},
        {"width", w.width},
        {"mounts", w.mounts},
        {"y_col", w.y_col},
        {"tensors", std::move(tensors)},
    });
  }
  writer.close();

  ShardManifest manifest;
  manifest.doc = {
      {"format", kFormatName},
      {"version", kFormatVersion},
      {"config", config_echo},
      {"windows", std::move(entries)},
      {"summary",
       {{"windows", windows.size()},
        {"positives", positives},
        {"positive_fraction",
         windows.empty() ? 0.0
                         : static_cast<double>(positives) / windows.size()}}},
  };
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  out << manifest.doc.dump(2) << '\n';
  if (!out) {
    throw ShardError(ShardErrorCode::kIo,
                     "cannot write " + (dir / kManifestName).string());
  }
  return manifest;
}

ShardManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) {
    throw ShardError(ShardErrorCode::kIo,
                     "cannot open " + (dir / kManifestName).string());
  }
  ShardManifest manifest;
  try {
    manifest.doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ShardError(ShardErrorCode::kSchema,
                     "unparsable manifest in " + dir.string() + ": " + e.what());
  }
  if (!manifest.doc.is_object() || manifest.doc.value("format", "") != kFormatName ||
      !manifest.doc.contains("windows")) {
    throw ShardError(ShardErrorCode::kSchema,
                     dir.string() + " is not a copilot shard");
  }
  const auto version = manifest.doc.value("version", 0u);
  if (version != kFormatVersion) {
    throw ShardError(ShardErrorCode::kVersionMismatch,
                     dir.string() + " manifest version " +
                         std::to_string(version));
  }
  return manifest;
}

std::vector<Window> read_shard(const std::filesystem::path& dir,
                               const ReadOptions& options) {
  const ShardManifest manifest = read_manifest(dir);
  ContainerReader reader(dir / kDataName);
  std::vector<Window> windows;
  try {
    for (const auto& entry : manifest.doc.at("windows")) {
      Window w;
      w.window_id = entry.at("window_id").get<std::string>();
      w.scene_id = entry.at("scene_id").get<std::string>();
      w.modality = modality_from_name(entry.at("modality").get<std::string>());
      w.views = entry.at("views").get<int>();
      w.frames = entry.at("frames").get<int>();
      w.height = entry.at("height").get<int>();
      w.width = entry.at("width").get<int>();
      w.mounts = entry.at("mounts").get<std::vector<int>>();
      const auto& tensors = entry.at("tensors");
      auto load = [&](const char* name) {
        return reader.read(record_from_json(tensors.at(name)));
      };
      if (options.rgb && tensors.contains("rgb")) w.rgb = load("rgb").to_u8();
      if (options.depth && tensors.contains("depth")) {
        w.depth = load("depth").to_f32();
      }
      w.y_col = load("y_col").to_u8().at(0) != 0;
      const auto joints = load("y_joint").to_u8();
      if (joints.size() != sim::kNumJoints) {
        throw ShardError(ShardErrorCode::kSchema, "y_joint must have 10 entries");
      }
      for (int j = 0; j < sim::kNumJoints; ++j) w.y_joint[j] = joints[j] != 0;
      w.map_valid = load("map_valid").to_u8();
      if (options.maps) {
        w.y_map = load("y_map").to_f32();
      } else {
        // Keep the window self-consistent without the payload.
        std::fill(w.map_valid.begin(), w.map_valid.end(), 0);
      }
      if (w.y_col != entry.at("y_col").get<bool>()) {
        throw ShardError(ShardErrorCode::kSchema,
                         "label of '" + w.window_id + "' disagrees with manifest");
      }
      windows.push_back(std::move(w));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ShardError(ShardErrorCode::kSchema,
                     "bad manifest in " + dir.string() + ": " + e.what());
  }
  return windows;
}

}  // namespace copilot::data
