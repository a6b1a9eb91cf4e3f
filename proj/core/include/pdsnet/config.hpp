// Copyright 2026 The pdsnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PDSNET_CONFIG_HPP_
#define PDSNET_CONFIG_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pdsnet/model.hpp"
#include "pdsnet/training.hpp"

namespace pdsnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where the records come from and how they are split.
struct DataConfig {
  std::string records;
  std::string manifest;  // optional; empty means split by density below
  double density = 0.05;
  std::uint64_t split_seed = 0;

  void validate() const;
};

/// One experiment: data source, architecture, and training schedule.
/// vocab sizes are never configured; they come from the dataset.
struct ExperimentConfig {
  DataConfig data;
  PdsNetConfig model;
  TrainConfig train;
};

/// Parses the sectioned key-value format:
///
///   # comment
///   [train]
///   lr = 0.001
///
/// Sections are data, model, and train. Every key must be known, parse
/// cleanly, and appear at most once; violations raise ConfigError with the
/// line number.
ExperimentConfig parse_config_text(std::string_view text);

ExperimentConfig load_config(const std::string& path);

/// Applies one "section.key=value" override on top of a parsed config,
/// with the same strictness as the file parser.
void apply_override(ExperimentConfig& config, std::string_view assignment);

/// Canonical serialization: every key in a fixed order, values rendered
/// with shortest round-trip formatting. Parsing it back yields an equal
/// config.
std::string canonical_config_text(const ExperimentConfig& config);

/// Stable digest of the canonical text, "cfg-" plus 16 hex digits. Any
/// config change, and nothing else, changes it.
std::string config_fingerprint(const ExperimentConfig& config);

}  // namespace pdsnet

#endif  // PDSNET_CONFIG_HPP_
