// Copyright 2026 The COPILOT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace copilot::cli {

/// A value set from a flag or environment variable, addressed by a JSON
/// pointer into the run configuration ("/train/lambda_map").
using Override = std::pair<std::string, nlohmann::json>;

/// Run configuration defaults of a command: {command, seed, out, ...}.
nlohmann::json default_run_config(std::string_view command);

/// Defaults, then the optional config file (merge patch), then overrides.
/// The result is canonical: every field present, nested seeds equal to the
/// global seed. Throws ConfigError on unknown keys or invalid values.
nlohmann::json resolve_run_config(std::string_view command,
                                  const std::filesystem::path& config_file,
                                  const std::vector<Override>& overrides);

/// Each writes run_config.json into its output directory, logs progress to
/// `log` and throws copilot::Error on failure.
void run_datagen(const nlohmann::json& rc, std::ostream& log);
void run_train(const nlohmann::json& rc, std::ostream& log);
void run_eval(const nlohmann::json& rc, std::ostream& log);
void run_control(const nlohmann::json& rc, std::ostream& log);
void run_viz(const nlohmann::json& rc, std::ostream& log);

void run_command(const nlohmann::json& rc, std::ostream& log);

}  // namespace copilot::cli
