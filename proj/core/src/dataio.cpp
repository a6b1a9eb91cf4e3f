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

#include "pdsnet/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pdsnet/iforest.hpp"
#include "pdsnet/rng.hpp"

namespace pdsnet {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

constexpr std::string_view kCsvHeader =
    "user_id,service_id,rt,user_country,user_as,user_city,"
    "service_country,service_as,service_city";

double parse_double(std::string_view text, const char* context) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(std::string(context) + ": unparsable float '" +
                    std::string(text) + "'");
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view text, const char* context) {
  Int value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(std::string(context) + ": unparsable integer '" +
                    std::string(text) + "'");
  }
  return value;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

std::string_view trim_cr(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
    line.remove_suffix(1);
  }
  return line;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(trim_cr(text.substr(pos, end - pos)));
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t end = line.find('\t', pos);
    if (end == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      return cells;
    }
    cells.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
}

std::string normalize_header(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '[' || c == ']' || c == ' ' || c == '\t') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool is_missing_cell(std::string_view cell) {
  return cell.empty() || cell == "null" || cell == "NULL" || cell == "Null";
}

struct MetaTable {
  // Per row: country, as, city; empty string means MISSING.
  std::vector<std::array<std::string, 3>> rows;
};

MetaTable load_meta(const std::string& path) {
  const std::string text = slurp(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError(path + ": empty metadata file");
  const auto header = split_tabs(lines[0]);
  int country_col = -1;
  int as_col = -1;
  int city_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = normalize_header(header[i]);
    if (name == "country") country_col = static_cast<int>(i);
    if (name == "as") as_col = static_cast<int>(i);
    if (name == "city") city_col = static_cast<int>(i);
  }
  MetaTable meta;
  meta.rows.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_tabs(lines[r]);
    std::array<std::string, 3> row;
    const std::array<int, 3> cols = {country_col, as_col, city_col};
    for (std::size_t f = 0; f < 3; ++f) {
      if (cols[f] >= 0 && static_cast<std::size_t>(cols[f]) < cells.size() &&
          !is_missing_cell(cells[static_cast<std::size_t>(cols[f])])) {
        row[f] = std::string(cells[static_cast<std::size_t>(cols[f])]);
      }
    }
    meta.rows.push_back(std::move(row));
  }
  return meta;
}

std::string escape_csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::vector<std::string> parse_csv_line(std::string_view line,
                                        const char* context) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) {
    throw DataError(std::string(context) + ": unterminated quote");
  }
  fields.push_back(std::move(current));
  return fields;
}

std::size_t robust_ceil(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace

std::string_view feature_name(Feature f) {
  switch (f) {
    case Feature::kUserCountry: return "user_country";
    case Feature::kUserAs: return "user_as";
    case Feature::kUserCity: return "user_city";
    case Feature::kServiceCountry: return "service_country";
    case Feature::kServiceAs: return "service_as";
    case Feature::kServiceCity: return "service_city";
  }
  return "unknown";
}

Vocabulary::Vocabulary() {
  values_.emplace_back();
  index_.emplace(std::string(), kMissingId);
}

std::uint32_t Vocabulary::add(std::string_view value) {
  const auto it = index_.find(value);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(values_.size());
  values_.emplace_back(value);
  index_.emplace(values_.back(), id);
  return id;
}

std::uint32_t Vocabulary::id_of(std::string_view value) const {
  const auto it = index_.find(value);
  if (it == index_.end()) {
    throw DataError("vocabulary: unknown value '" + std::string(value) + "'");
  }
  return it->second;
}

bool Vocabulary::contains(std::string_view value) const {
  return index_.find(value) != index_.end();
}

const std::string& Vocabulary::value_of(std::uint32_t id) const {
  if (id >= values_.size()) {
    throw DataError("vocabulary: id " + std::to_string(id) +
                    " out of range for size " + std::to_string(values_.size()));
  }
  return values_[id];
}

Dataset load_wsdream(const std::string& rt_matrix_path,
                     const std::string& user_meta_path,
                     const std::string& service_meta_path) {
  const MetaTable users = load_meta(user_meta_path);
  const MetaTable services = load_meta(service_meta_path);
  const std::size_t n_users = users.rows.size();
  const std::size_t n_services = services.rows.size();
  if (n_users == 0 || n_services == 0) {
    throw DataError("metadata files must list at least one row each");
  }

  const std::string matrix_text = slurp(rt_matrix_path);
  std::vector<double> matrix;
  matrix.reserve(n_users * n_services);
  const char* p = matrix_text.data();
  const char* const end = p + matrix_text.size();
  while (p < end) {
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (p >= end) break;
    double value = 0.0;
    const auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{}) {
      throw DataError(rt_matrix_path + ": unparsable float near offset " +
                      std::to_string(p - matrix_text.data()));
    }
    matrix.push_back(value);
    p = next;
  }
  if (matrix.size() != n_users * n_services) {
    throw DataError(rt_matrix_path + ": " + std::to_string(matrix.size()) +
                    " values, expected " + std::to_string(n_users) + " x " +
                    std::to_string(n_services) + " = " +
                    std::to_string(n_users * n_services));
  }

  Dataset ds;
  ds.n_users = n_users;
  ds.n_services = n_services;

  std::vector<std::array<std::uint32_t, 3>> user_feats(n_users);
  for (std::size_t i = 0; i < n_users; ++i) {
    user_feats[i] = {ds.vocabs[Feature::kUserCountry].add(users.rows[i][0]),
                     ds.vocabs[Feature::kUserAs].add(users.rows[i][1]),
                     ds.vocabs[Feature::kUserCity].add(users.rows[i][2])};
  }
  std::vector<std::array<std::uint32_t, 3>> service_feats(n_services);
  for (std::size_t j = 0; j < n_services; ++j) {
    service_feats[j] = {
        ds.vocabs[Feature::kServiceCountry].add(services.rows[j][0]),
        ds.vocabs[Feature::kServiceAs].add(services.rows[j][1]),
        ds.vocabs[Feature::kServiceCity].add(services.rows[j][2])};
  }

  for (std::size_t i = 0; i < n_users; ++i) {
    for (std::size_t j = 0; j < n_services; ++j) {
      const double rt = matrix[i * n_services + j];
      if (!(rt > 0.0)) continue;
      QoSRecord rec;
      rec.user_id = static_cast<std::uint32_t>(i);
      rec.service_id = static_cast<std::uint32_t>(j);
      rec.rt = rt;
      rec.features = {user_feats[i][0],    user_feats[i][1],
                      user_feats[i][2],    service_feats[j][0],
                      service_feats[j][1], service_feats[j][2]};
      ds.records.push_back(rec);
    }
  }
  return ds;
}

void save_records_csv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << kCsvHeader << "\n";
  for (const QoSRecord& rec : dataset.records) {
    out << rec.user_id << ',' << rec.service_id << ',' << format_double(rec.rt);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const auto feature = static_cast<Feature>(f);
      out << ','
          << escape_csv(dataset.vocabs[feature].value_of(rec.features[f]));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

Dataset load_records_csv(const std::string& path) {
  const std::string text = slurp(path);
  const auto lines = split_lines(text);
  if (lines.empty() || trim_cr(lines[0]) != kCsvHeader) {
    throw DataError(path + ": missing canonical header");
  }
  Dataset ds;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = parse_csv_line(lines[r], path.c_str());
    if (fields.size() != 3 + kNumFeatures) {
      throw DataError(path + ": line " + std::to_string(r + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected 9");
    }
    QoSRecord rec;
    rec.user_id = parse_int<std::uint32_t>(fields[0], path.c_str());
    rec.service_id = parse_int<std::uint32_t>(fields[1], path.c_str());
    rec.rt = parse_double(fields[2], path.c_str());
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      rec.features[f] = ds.vocabs[static_cast<Feature>(f)].add(fields[3 + f]);
    }
    ds.records.push_back(rec);
    ds.n_users = std::max<std::size_t>(ds.n_users, rec.user_id + 1);
    ds.n_services = std::max<std::size_t>(ds.n_services, rec.service_id + 1);
  }
  return ds;
}

SplitSpec SplitSpec::from_density(double density, std::uint64_t seed) {
  SplitSpec spec;
  spec.density = density;
  spec.train_frac = density;
  spec.validation_frac = 0.20;
  spec.test_frac = 1.0 - density - 0.20;
  spec.seed = seed;
  spec.validate();
  return spec;
}

void SplitSpec::validate() const {
  const double sum = train_frac + test_frac + validation_frac;
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw DataError("split fractions sum to " + format_double(sum) +
                    ", expected 1");
  }
  for (double f : {train_frac, test_frac, validation_frac}) {
    if (f < 0.0 || f > 1.0) {
      throw DataError("split fraction " + format_double(f) + " out of [0, 1]");
    }
  }
  if (std::fabs(density - train_frac) > 1e-9) {
    throw DataError("split density " + format_double(density) +
                    " does not equal the train fraction " +
                    format_double(train_frac));
  }
}

SplitResult split_by_density(std::span<const QoSRecord> records,
                             const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = records.size();
  if (n == 0) throw DataError("split: empty input");

  const auto n_train = static_cast<std::size_t>(
      std::llround(spec.train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(
      std::llround(spec.validation_frac * static_cast<double>(n)));
  if (n_train + n_val > n) {
    throw DataError("split: rounded train+validation exceed the record count");
  }

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  RngStream rng(derive_seed(spec.seed, "split"));
  rng.shuffle(idx);

  SplitResult result;
  result.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  result.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                     idx.end() - static_cast<std::ptrdiff_t>(n_val));
  result.validation.assign(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.test.begin(), result.test.end());
  std::sort(result.validation.begin(), result.validation.end());
  return result;
}

void save_split_manifest(const std::string& path, const SplitSpec& spec,
                         const SplitResult& split) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "pdsnet-split v1\n";
  out << "seed " << spec.seed << "\n";
  out << "density " << format_double(spec.density) << "\n";
  out << "fractions " << format_double(spec.train_frac) << ' '
      << format_double(spec.test_frac) << ' '
      << format_double(spec.validation_frac) << "\n";
  out << "counts " << split.train.size() << ' ' << split.test.size() << ' '
      << split.validation.size() << "\n";
  const auto emit = [&out](const char* label, const std::vector<std::size_t>& v) {
    out << label;
    for (std::size_t i : v) out << ' ' << i;
    out << "\n";
  };
  emit("train", split.train);
  emit("test", split.test);
  emit("validation", split.validation);
  if (!out) throw DataError("failed writing " + path);
}

SplitManifest load_split_manifest(const std::string& path) {
  const std::string text = slurp(path);
  const auto lines = split_lines(text);
  if (lines.size() != 8 || lines[0] != "pdsnet-split v1") {
    throw DataError(path + ": not a split manifest");
  }
  const auto words = [&](std::size_t line, std::string_view label) {
    std::vector<std::string_view> out;
    std::string_view s = lines[line];
    std::size_t pos = 0;
    while (pos < s.size()) {
      while (pos < s.size() && s[pos] == ' ') ++pos;
      if (pos >= s.size()) break;
      std::size_t end = s.find(' ', pos);
      if (end == std::string_view::npos) end = s.size();
      out.push_back(s.substr(pos, end - pos));
      pos = end;
    }
    if (out.empty() || out[0] != label) {
      throw DataError(path + ": expected '" + std::string(label) + "' line");
    }
    return out;
  };

  SplitManifest m;
  {
    const auto w = words(1, "seed");
    if (w.size() != 2) throw DataError(path + ": malformed seed line");
    m.spec.seed = parse_int<std::uint64_t>(w[1], path.c_str());
  }
  {
    const auto w = words(2, "density");
    if (w.size() != 2) throw DataError(path + ": malformed density line");
    m.spec.density = parse_double(w[1], path.c_str());
  }
  {
    const auto w = words(3, "fractions");
    if (w.size() != 4) throw DataError(path + ": malformed fractions line");
    m.spec.train_frac = parse_double(w[1], path.c_str());
    m.spec.test_frac = parse_double(w[2], path.c_str());
    m.spec.validation_frac = parse_double(w[3], path.c_str());
  }
  std::array<std::size_t, 3> counts{};
  {
    const auto w = words(4, "counts");
    if (w.size() != 4) throw DataError(path + ": malformed counts line");
    for (std::size_t i = 0; i < 3; ++i) {
      counts[i] = parse_int<std::size_t>(w[i + 1], path.c_str());
    }
  }
  const auto read_list = [&](std::size_t line, std::string_view label,
                             std::size_t want) {
    const auto w = words(line, label);
    if (w.size() != want + 1) {
      throw DataError(path + ": " + std::string(label) + " list has " +
                      std::to_string(w.size() - 1) + " indices, manifest says " +
                      std::to_string(want));
    }
    std::vector<std::size_t> out;
    out.reserve(want);
    for (std::size_t i = 1; i < w.size(); ++i) {
      out.push_back(parse_int<std::size_t>(w[i], path.c_str()));
    }
    return out;
  };
  m.split.train = read_list(5, "train", counts[0]);
  m.split.test = read_list(6, "test", counts[1]);
  m.split.validation = read_list(7, "validation", counts[2]);
  m.spec.validate();
  return m;
}

std::vector<QoSRecord> take_records(std::span<const QoSRecord> records,
                                    std::span<const std::size_t> indices) {
  std::vector<QoSRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= records.size()) {
      throw DataError("record index " + std::to_string(i) +
                      " out of range for " + std::to_string(records.size()) +
                      " records");
    }
    out.push_back(records[i]);
  }
  return out;
}

NoiseResult inject_feature_noise(const Dataset& dataset, double user_fraction,
                                 std::uint64_t seed) {
  if (!(user_fraction > 0.0) || user_fraction > 1.0) {
    throw DataError("noise fraction " + format_double(user_fraction) +
                    " out of (0, 1]");
  }
  for (Feature f : {Feature::kUserCity, Feature::kUserAs}) {
    if (dataset.vocabs[f].size() < 3) {
      throw DataError(std::string("fewer than 2 in-vocabulary values for ") +
                      std::string(feature_name(f)));
    }
  }

  std::set<std::uint32_t> user_set;
  for (const QoSRecord& rec : dataset.records) user_set.insert(rec.user_id);
  std::vector<std::uint32_t> users(user_set.begin(), user_set.end());
  const std::size_t n_corrupt =
      robust_ceil(user_fraction * static_cast<double>(users.size()));

  RngStream pick_rng(derive_seed(seed, "noise-users"));
  pick_rng.shuffle(users);
  std::vector<std::uint32_t> corrupted(users.begin(),
                                       users.begin() + static_cast<std::ptrdiff_t>(n_corrupt));
  std::sort(corrupted.begin(), corrupted.end());

  // Per corrupted user, one fake value per feature, different from every
  // value that user actually had.
  std::unordered_map<std::uint32_t, std::array<std::uint32_t, 2>> fakes;
  const std::array<Feature, 2> noisy_features = {Feature::kUserCity,
                                                 Feature::kUserAs};
  for (std::uint32_t u : corrupted) {
    std::array<std::set<std::uint32_t>, 2> originals;
    for (const QoSRecord& rec : dataset.records) {
      if (rec.user_id != u) continue;
      for (std::size_t f = 0; f < 2; ++f) {
        originals[f].insert(
            rec.features[static_cast<std::size_t>(noisy_features[f])]);
      }
    }
    RngStream value_rng(derive_seed(seed, "noise-values", u));
    std::array<std::uint32_t, 2> fake{};
    for (std::size_t f = 0; f < 2; ++f) {
      const std::size_t pool =
          dataset.vocabs[noisy_features[f]].size() - 1;
      if (originals[f].size() >= pool) {
        throw DataError(std::string("no alternative value left for ") +
                        std::string(feature_name(noisy_features[f])));
      }
      std::uint32_t candidate;
      do {
        candidate = 1 + static_cast<std::uint32_t>(value_rng.uniform_int(pool));
      } while (originals[f].contains(candidate));
      fake[f] = candidate;
    }
    fakes.emplace(u, fake);
  }

  NoiseResult result;
  result.dataset = dataset;
  result.corrupted_users = std::move(corrupted);
  for (QoSRecord& rec : result.dataset.records) {
    const auto it = fakes.find(rec.user_id);
    if (it == fakes.end()) continue;
    rec.features[static_cast<std::size_t>(Feature::kUserCity)] = it->second[0];
    rec.features[static_cast<std::size_t>(Feature::kUserAs)] = it->second[1];
  }
  return result;
}

Dataset filter_outliers_iforest(const Dataset& dataset, double score_threshold,
                                std::size_t trees, std::size_t subsample,
                                std::uint64_t seed) {
  if (!(score_threshold > 0.0) || score_threshold > 1.0) {
    throw DataError("outlier score threshold " + format_double(score_threshold) +
                    " out of (0, 1]");
  }
  if (dataset.records.empty()) throw DataError("outlier filter: no records");

  std::vector<double> rts;
  rts.reserve(dataset.records.size());
  for (const QoSRecord& rec : dataset.records) rts.push_back(rec.rt);

  IsolationForest forest(rts, {trees, subsample, seed});
  Dataset out;
  out.vocabs = dataset.vocabs;
  out.n_users = dataset.n_users;
  out.n_services = dataset.n_services;
  for (const QoSRecord& rec : dataset.records) {
    if (forest.outlier_score(rec.rt) <= score_threshold) {
      out.records.push_back(rec);
    }
  }
  return out;
}

}  // namespace pdsnet
