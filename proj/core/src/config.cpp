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

#include "pdsnet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "pdsnet/dataio.hpp"

namespace pdsnet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw ConfigError(line == 0 ? message
                              : "line " + std::to_string(line) + ": " + message);
}

double parse_double(std::string_view value, std::size_t line,
                    std::string_view key) {
  double out = 0.0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    fail(line, "value for '" + std::string(key) + "' is not a number: '" +
                   std::string(value) + "'");
  return out;
}

std::uint64_t parse_uint(std::string_view value, std::size_t line,
                         std::string_view key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    fail(line, "value for '" + std::string(key) +
                   "' is not a non-negative integer: '" + std::string(value) +
                   "'");
  return out;
}

bool parse_bool(std::string_view value, std::size_t line,
                std::string_view key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(line, "value for '" + std::string(key) + "' is not a boolean: '" +
                 std::string(value) + "'");
}

std::array<std::size_t, 3> parse_widths(std::string_view value,
                                        std::size_t line,
                                        std::string_view key) {
  std::array<std::size_t, 3> out{};
  std::size_t index = 0;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string_view token =
        trim(value.substr(start, comma == std::string_view::npos
                                     ? std::string_view::npos
                                     : comma - start));
    if (index >= out.size())
      fail(line, "'" + std::string(key) + "' takes exactly three values");
    out[index++] = parse_uint(token, line, key);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (index != out.size())
    fail(line, "'" + std::string(key) + "' takes exactly three values");
  return out;
}

/// Routes one key to its field; `line` is 0 for CLI overrides.
void set_key(ExperimentConfig& config, std::string_view section,
             std::string_view key, std::string_view value, std::size_t line) {
  if (section == "data") {
    if (key == "records") {
      config.data.records = std::string(value);
    } else if (key == "manifest") {
      config.data.manifest = std::string(value);
    } else if (key == "density") {
      config.data.density = parse_double(value, line, key);
    } else if (key == "split_seed") {
      config.data.split_seed = parse_uint(value, line, key);
    } else {
      fail(line, "unknown key '" + std::string(key) + "' in [data]");
    }
    return;
  }
  if (section == "model") {
    if (key == "latent_dim") {
      config.model.latent_dim = parse_uint(value, line, key);
    } else if (key == "embed_exp") {
      config.model.embed_exp = parse_uint(value, line, key);
    } else if (key == "prior_hidden") {
      config.model.prior_hidden = parse_uint(value, line, key);
    } else if (key == "posterior_hidden") {
      config.model.posterior_hidden = parse_uint(value, line, key);
    } else if (key == "head_widths") {
      config.model.head_widths = parse_widths(value, line, key);
    } else if (key == "ablation") {
      try {
        config.model.ablation = ablation_from_string(value);
      } catch (const std::invalid_argument& e) {
        fail(line, e.what());
      }
    } else {
      fail(line, "unknown key '" + std::string(key) + "' in [model]");
    }
    return;
  }
  if (section == "train") {
    if (key == "delta") {
      config.train.delta = parse_double(value, line, key);
    } else if (key == "lambda1") {
      config.train.lambdas[0] = parse_double(value, line, key);
    } else if (key == "lambda2") {
      config.train.lambdas[1] = parse_double(value, line, key);
    } else if (key == "lambda3") {
      config.train.lambdas[2] = parse_double(value, line, key);
    } else if (key == "loss") {
      try {
        config.train.loss_kind = loss_kind_from_string(value);
      } catch (const std::invalid_argument& e) {
        fail(line, e.what());
      }
    } else if (key == "huber_transition") {
      config.train.huber_transition = parse_double(value, line, key);
    } else if (key == "lr") {
      config.train.lr = parse_double(value, line, key);
    } else if (key == "batch_size") {
      config.train.batch_size = parse_uint(value, line, key);
    } else if (key == "epochs") {
      config.train.epochs = parse_uint(value, line, key);
    } else if (key == "patience") {
      config.train.patience = parse_uint(value, line, key);
    } else if (key == "seed") {
      config.train.seed = parse_uint(value, line, key);
    } else if (key == "untrusted_task_weight") {
      config.train.untrusted_task_weight = parse_double(value, line, key);
    } else if (key == "stop_posterior_grad") {
      config.train.stop_posterior_grad = parse_bool(value, line, key);
    } else if (key == "eval_use_mean") {
      config.train.eval_use_mean = parse_bool(value, line, key);
    } else {
      fail(line, "unknown key '" + std::string(key) + "' in [train]");
    }
    return;
  }
  fail(line, "unknown section [" + std::string(section) + "]");
}

}  // namespace

void DataConfig::validate() const {
  if (!(density > 0.0 && density < 1.0))
    throw ConfigError("data.density must be in (0, 1)");
}

ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(
        start, nl == std::string_view::npos ? std::string_view::npos
                                            : nl - start);
    ++line_no;
    line = trim(line);
    if (!line.empty() && line.front() != '#') {
      if (line.front() == '[') {
        if (line.back() != ']')
          fail(line_no, "malformed section header '" + std::string(line) + "'");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section != "data" && section != "model" && section != "train")
          fail(line_no, "unknown section [" + section + "]");
      } else {
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
          fail(line_no, "expected 'key = value', got '" + std::string(line) +
                            "'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        if (section.empty())
          fail(line_no,
               "key '" + std::string(key) + "' appears before any section");
        const std::string full = section + "." + std::string(key);
        if (!seen.insert(full).second)
          fail(line_no, "duplicate key '" + full + "'");
        set_key(config, section, key, value, line_no);
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override must look like section.key=value, got '" +
                      std::string(assignment) + "'");
  const std::string_view path = trim(assignment.substr(0, eq));
  const std::string_view value = trim(assignment.substr(eq + 1));
  const std::size_t dot = path.find('.');
  if (dot == std::string_view::npos)
    throw ConfigError("override key must be section.key, got '" +
                      std::string(path) + "'");
  set_key(config, path.substr(0, dot), path.substr(dot + 1), value, 0);
}

std::string canonical_config_text(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "[data]\n";
  out << "records = " << config.data.records << '\n';
  out << "manifest = " << config.data.manifest << '\n';
  out << "density = " << format_double(config.data.density) << '\n';
  out << "split_seed = " << config.data.split_seed << '\n';
  out << "[model]\n";
  out << "latent_dim = " << config.model.latent_dim << '\n';
  out << "embed_exp = " << config.model.embed_exp << '\n';
  out << "prior_hidden = " << config.model.prior_hidden << '\n';
  out << "posterior_hidden = " << config.model.posterior_hidden << '\n';
  out << "head_widths = " << config.model.head_widths[0] << ','
      << config.model.head_widths[1] << ',' << config.model.head_widths[2]
      << '\n';
  out << "ablation = " << to_string(config.model.ablation) << '\n';
  out << "[train]\n";
  out << "delta = " << format_double(config.train.delta) << '\n';
  out << "lambda1 = " << format_double(config.train.lambdas[0]) << '\n';
  out << "lambda2 = " << format_double(config.train.lambdas[1]) << '\n';
  out << "lambda3 = " << format_double(config.train.lambdas[2]) << '\n';
  out << "loss = " << to_string(config.train.loss_kind) << '\n';
  out << "huber_transition = " << format_double(config.train.huber_transition)
      << '\n';
  out << "lr = " << format_double(config.train.lr) << '\n';
  out << "batch_size = " << config.train.batch_size << '\n';
  out << "epochs = " << config.train.epochs << '\n';
  out << "patience = " << config.train.patience << '\n';
  out << "seed = " << config.train.seed << '\n';
  out << "untrusted_task_weight = "
      << format_double(config.train.untrusted_task_weight) << '\n';
  out << "stop_posterior_grad = "
      << (config.train.stop_posterior_grad ? "true" : "false") << '\n';
  out << "eval_use_mean = " << (config.train.eval_use_mean ? "true" : "false")
      << '\n';
  return out.str();
}

std::string config_fingerprint(const ExperimentConfig& config) {
  const std::string text = canonical_config_text(config);
  // FNV-1a, 64 bit.
  std::uint64_t hash = 1469598103934665603ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  char buffer[21];
  std::snprintf(buffer, sizeof(buffer), "cfg-%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(buffer);
}

}  // namespace pdsnet
