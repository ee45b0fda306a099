// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#include "copilot/model/checkpoint.hpp"

#include <fstream>
#include <map>

#include "copilot/common/error.hpp"
#include "copilot/dataset/tensor_io.hpp"

namespace copilot::nn {

namespace fs = std::filesystem;

void save_checkpoint(const Model& model, const fs::path& dir,
                     const nlohmann::json& meta) {
  fs::create_directories(dir);
  data::ContainerWriter writer(dir / "weights.bin");
  nlohmann::json tensors = nlohmann::json::object();
  for (const Parameter<float>* p : model.parameters()) {
    const auto rows = static_cast<std::uint32_t>(p->value.rows());
    const auto cols = static_cast<std::uint32_t>(p->value.cols());
    const auto rec = writer.append(
        p->name, data::Tensor::f32({rows, cols},
                                   {p->value.data(),
                                    static_cast<std::size_t>(p->value.size())}));
    tensors[p->name] = data::record_to_json(rec);
  }
  writer.close();
  const nlohmann::json doc = {
      {"format", "copilot-checkpoint"},
      {"version", data::kFormatVersion},
      {"model", model_config_to_json(model.config())},
      {"parameters", model.parameter_count()},
      {"tensors", tensors},
      {"meta", meta},
  };
  std::ofstream out(dir / "checkpoint.json");
  out << doc.dump(2) << '\n';
  if (!out) {
    throw data::ShardError(data::ShardErrorCode::kIo,
                           "cannot write " + (dir / "checkpoint.json").string());
  }
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) {
    throw data::ShardError(data::ShardErrorCode::kIo,
                           "cannot open " + (dir / "checkpoint.json").string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw data::ShardError(data::ShardErrorCode::kSchema,
                           std::string("checkpoint.json: ") + e.what());
  }
  if (doc.value("format", "") != "copilot-checkpoint") {
    throw data::ShardError(data::ShardErrorCode::kSchema,
                           "not a checkpoint: " + dir.string());
  }
  if (doc.value("version", 0u) != data::kFormatVersion) {
    throw data::ShardError(data::ShardErrorCode::kVersionMismatch,
                           "checkpoint version " +
                               doc.value("version", nlohmann::json()).dump());
  }
  LoadedCheckpoint ck{Model(model_config_from_json(doc.at("model"))),
                      doc.value("meta", nlohmann::json::object())};
  data::ContainerReader reader(dir / "weights.bin");
  const auto& tensors = doc.at("tensors");
  for (Parameter<float>* p : ck.model.parameters()) {
    if (!tensors.contains(p->name)) {
      throw data::ShardError(data::ShardErrorCode::kSchema,
                             "checkpoint lacks tensor " + p->name);
    }
    const auto rec = data::record_from_json(tensors.at(p->name));
    const auto t = reader.read(rec);
    if (t.dims.size() != 2 || t.dims[0] != p->value.rows() ||
        t.dims[1] != p->value.cols() || t.dtype != data::DType::kF32) {
      throw data::ShardError(data::ShardErrorCode::kSchema,
                             "tensor " + p->name + " has the wrong shape");
    }
    const auto values = t.to_f32();
    std::copy(values.begin(), values.end(), p->value.data());
  }
  return ck;
}

}  // namespace copilot::nn
