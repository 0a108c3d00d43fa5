/*
 * Copyright 2026 The growprune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Flat key = value experiment configuration. '#' starts a comment; blank
// lines are ignored; unknown keys and malformed values raise ConfigError
// naming the key.

#include <filesystem>
#include <string>
#include <vector>

#include "growprune/orchestrator.hpp"

namespace growprune {

struct ExperimentConfig {
  std::string data_dir;
  std::string output_dir = "runs/default";
  std::vector<MethodKind> methods{MethodKind::grow_prune, MethodKind::tfs, MethodKind::nft};
  SplitConfig split;
  UpdateSchedule schedule;
  MethodConfig method;
  double compress_slack = 0.002;  // accuracy fraction, 0.002 = 0.2 points
  bool deterministic = true;
  bool density_maps = true;

  /// Cross-field checks; ConfigError names the first bad key.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Every recognized key, in serialization order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key from its textual value.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// All keys, one per line; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace growprune
