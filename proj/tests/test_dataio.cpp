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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "pdsnet/dataio.hpp"

using namespace pdsnet;

namespace {

namespace fs = std::filesystem;

fs::path test_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "pdsnet_dataio_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// (user_id, service_id, rt, decoded feature strings): the seed-for-seed
// comparable view of a record, independent of vocabulary id assignment.
std::vector<std::string> decoded_view(const Dataset& ds) {
  std::vector<std::string> rows;
  for (const QoSRecord& rec : ds.records) {
    std::string row = std::to_string(rec.user_id) + "|" +
                      std::to_string(rec.service_id) + "|" +
                      std::to_string(rec.rt);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      row += "|" + ds.vocabs[static_cast<Feature>(f)].value_of(rec.features[f]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset tiny_wsdream() {
  const fs::path dir = test_dir();
  write_file(dir / "rt.txt", "0.5 -1\n2.0 0.1\n");
  write_file(dir / "users.txt",
             "[User ID]\t[IP Address]\t[Country]\t[AS]\t[City]\n"
             "0\t1.2.3.4\tUnited States\tAS7132 SBC\tHouston\n"
             "1\t5.6.7.8\tGermany\tAS680 DFN\tBerlin\n");
  write_file(dir / "services.txt",
             "[Service ID]\t[WSDL Address]\t[Country]\t[AS]\t[City]\n"
             "0\thttp://a/ws\tAustralia\tnull\tSydney\n"
             "1\thttp://b/ws\tJapan\tAS2510 FUJITSU\tnull\n");
  return load_wsdream((dir / "rt.txt").string(), (dir / "users.txt").string(),
                      (dir / "services.txt").string());
}

}  // namespace

TEST_SUITE_BEGIN("dataio");

TEST_CASE("matrix load keeps positive entries and skips unobserved ones") {
  Dataset ds = tiny_wsdream();
  REQUIRE(ds.records.size() == 3);
  CHECK(ds.n_users == 2);
  CHECK(ds.n_services == 2);
  CHECK(ds.records[0].user_id == 0);
  CHECK(ds.records[0].service_id == 0);
  CHECK(ds.records[0].rt == 0.5);
  CHECK(ds.records[1].user_id == 1);
  CHECK(ds.records[1].service_id == 0);
  CHECK(ds.records[2].rt == 0.1);
}

TEST_CASE("null metadata cells map to the MISSING id") {
  Dataset ds = tiny_wsdream();
  const auto sa = static_cast<std::size_t>(Feature::kServiceAs);
  const auto sc = static_cast<std::size_t>(Feature::kServiceCity);
  CHECK(ds.records[0].features[sa] == Vocabulary::kMissingId);
  CHECK(ds.records[2].features[sa] != Vocabulary::kMissingId);
  CHECK(ds.records[2].features[sc] == Vocabulary::kMissingId);
  CHECK(ds.vocabs[Feature::kUserCity].value_of(
            ds.records[0].features[static_cast<std::size_t>(
                Feature::kUserCity)]) == "Houston");
}

TEST_CASE("matrix dimensions must match the metadata row counts") {
  const fs::path dir = test_dir();
  write_file(dir / "bad_rt.txt", "0.5 1.0 2.0\n");
  CHECK_THROWS_AS(load_wsdream((dir / "bad_rt.txt").string(),
                               (dir / "users.txt").string(),
                               (dir / "services.txt").string()),
                  DataError);
}

TEST_CASE("a non-numeric matrix cell is a data error") {
  const fs::path dir = test_dir();
  write_file(dir / "nan_rt.txt", "0.5 oops\n1.0 2.0\n");
  CHECK_THROWS_AS(load_wsdream((dir / "nan_rt.txt").string(),
                               (dir / "users.txt").string(),
                               (dir / "services.txt").string()),
                  DataError);
}

TEST_CASE("vocabulary ids are dense and reserve zero for MISSING") {
  Vocabulary v;
  CHECK(v.size() == 1);
  CHECK(v.add("") == Vocabulary::kMissingId);
  const auto a = v.add("alpha");
  const auto b = v.add("beta");
  CHECK(v.add("alpha") == a);
  CHECK(a == 1);
  CHECK(b == 2);
  CHECK(v.size() == 3);
  CHECK(v.value_of(0) == "");
  CHECK(v.value_of(b) == "beta");
  CHECK(v.id_of("beta") == b);
  CHECK_THROWS_AS(v.id_of("gamma"), DataError);
  CHECK_THROWS_AS(v.value_of(9), DataError);
}

TEST_CASE("canonical CSV round-trips the record set exactly") {
  SynthResult synth = synth_generate(12, 9, 4, 0.25, 0.3, 2024);
  const fs::path file = test_dir() / "roundtrip.csv";
  save_records_csv(file.string(), synth.dataset);
  Dataset reloaded = load_records_csv(file.string());
  CHECK(decoded_view(reloaded) == decoded_view(synth.dataset));
  CHECK(reloaded.n_users == synth.dataset.n_users);
  CHECK(reloaded.n_services == synth.dataset.n_services);
}

TEST_CASE("CSV fields with commas and quotes survive the round trip") {
  Dataset ds;
  ds.n_users = 1;
  ds.n_services = 1;
  QoSRecord rec;
  rec.user_id = 0;
  rec.service_id = 0;
  rec.rt = 0.125;
  rec.features = {
      ds.vocabs[Feature::kUserCountry].add("Korea, Republic of"),
      ds.vocabs[Feature::kUserAs].add("AS1 \"Backbone\" Net"),
      ds.vocabs[Feature::kUserCity].add("Seoul"),
      0, 0, 0};
  ds.records.push_back(rec);
  const fs::path file = test_dir() / "quoting.csv";
  save_records_csv(file.string(), ds);
  Dataset reloaded = load_records_csv(file.string());
  CHECK(decoded_view(reloaded) == decoded_view(ds));
}

TEST_CASE("splits are disjoint, exhaustive, and sized to the fractions") {
  SynthResult synth = synth_generate(20, 30, 4, 0.0, 0.0, 7);
  const auto& records = synth.dataset.records;
  SplitSpec spec = SplitSpec::from_density(0.05, 11);
  SplitResult split = split_by_density(records, spec);

  const double n = static_cast<double>(records.size());
  CHECK(std::fabs(static_cast<double>(split.train.size()) - 0.05 * n) <= 1.0);
  CHECK(std::fabs(static_cast<double>(split.validation.size()) - 0.20 * n) <= 1.0);
  CHECK(split.train.size() + split.test.size() + split.validation.size() ==
        records.size());

  std::set<std::size_t> seen;
  for (const auto* part : {&split.train, &split.test, &split.validation}) {
    for (std::size_t i : *part) {
      CHECK(i < records.size());
      CHECK(seen.insert(i).second);
    }
  }
  CHECK(seen.size() == records.size());
}

TEST_CASE("degenerate all-train fractions keep every record") {
  SynthResult synth = synth_generate(5, 6, 3, 0.0, 0.0, 3);
  SplitSpec spec;
  spec.density = 1.0;
  spec.train_frac = 1.0;
  spec.test_frac = 0.0;
  spec.validation_frac = 0.0;
  spec.seed = 1;
  SplitResult split = split_by_density(synth.dataset.records, spec);
  CHECK(split.train.size() == synth.dataset.records.size());
  CHECK(split.test.empty());
  CHECK(split.validation.empty());
}

TEST_CASE("splitting is deterministic per seed and empty input errors") {
  SynthResult synth = synth_generate(8, 8, 3, 0.0, 0.0, 3);
  SplitSpec spec = SplitSpec::from_density(0.3, 21);
  SplitResult a = split_by_density(synth.dataset.records, spec);
  SplitResult b = split_by_density(synth.dataset.records, spec);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.validation == b.validation);
  spec.seed = 22;
  SplitResult c = split_by_density(synth.dataset.records, spec);
  CHECK(a.train != c.train);

  const std::vector<QoSRecord> none;
  CHECK_THROWS_AS(split_by_density(none, spec), DataError);
}

TEST_CASE("split manifests round-trip spec and index lists") {
  SynthResult synth = synth_generate(10, 12, 3, 0.0, 0.0, 5);
  SplitSpec spec = SplitSpec::from_density(0.25, 77);
  SplitResult split = split_by_density(synth.dataset.records, spec);
  const fs::path file = test_dir() / "split.manifest";
  save_split_manifest(file.string(), spec, split);
  SplitManifest loaded = load_split_manifest(file.string());
  CHECK(loaded.spec.seed == spec.seed);
  CHECK(loaded.spec.density == spec.density);
  CHECK(loaded.spec.train_frac == spec.train_frac);
  CHECK(loaded.spec.test_frac == spec.test_frac);
  CHECK(loaded.spec.validation_frac == spec.validation_frac);
  CHECK(loaded.split.train == split.train);
  CHECK(loaded.split.test == split.test);
  CHECK(loaded.split.validation == split.validation);
}

TEST_CASE("ten percent of 339 users rounds up to 34 corrupted users") {
  Dataset ds;
  ds.n_users = 339;
  ds.n_services = 2;
  const auto city_base = static_cast<std::size_t>(Feature::kUserCity);
  for (int c = 0; c < 6; ++c) {
    ds.vocabs[Feature::kUserCity].add("city" + std::to_string(c));
    ds.vocabs[Feature::kUserAs].add("as" + std::to_string(c));
  }
  for (std::uint32_t u = 0; u < 339; ++u) {
    QoSRecord rec;
    rec.user_id = u;
    rec.service_id = u % 2;
    rec.rt = 0.1 + 0.001 * u;
    rec.features = {0, 1 + u % 6, 1 + u % 6, 0, 0, 0};
    ds.records.push_back(rec);
  }
  NoiseResult noised = inject_feature_noise(ds, 0.10, 99);
  CHECK(noised.corrupted_users.size() == 34);

  std::set<std::uint32_t> corrupted(noised.corrupted_users.begin(),
                                    noised.corrupted_users.end());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const QoSRecord& before = ds.records[i];
    const QoSRecord& after = noised.dataset.records[i];
    CHECK(after.rt == before.rt);
    if (corrupted.contains(before.user_id)) {
      CHECK(after.features[city_base] != before.features[city_base]);
      CHECK(after.features[static_cast<std::size_t>(Feature::kUserAs)] !=
            before.features[static_cast<std::size_t>(Feature::kUserAs)]);
    } else {
      CHECK(after.features == before.features);
    }
  }
}

TEST_CASE("noise injection is deterministic per seed") {
  SynthResult synth = synth_generate(30, 10, 3, 0.0, 0.0, 8);
  NoiseResult a = inject_feature_noise(synth.dataset, 0.2, 123);
  NoiseResult b = inject_feature_noise(synth.dataset, 0.2, 123);
  CHECK(a.corrupted_users == b.corrupted_users);
  CHECK(a.dataset.records == b.dataset.records);
  NoiseResult c = inject_feature_noise(synth.dataset, 0.2, 124);
  CHECK(a.corrupted_users != c.corrupted_users);
}

TEST_CASE("noise injection needs at least two real values per feature") {
  Dataset ds;
  ds.n_users = 3;
  ds.n_services = 1;
  ds.vocabs[Feature::kUserCity].add("onlycity");
  ds.vocabs[Feature::kUserAs].add("as0");
  ds.vocabs[Feature::kUserAs].add("as1");
  for (std::uint32_t u = 0; u < 3; ++u) {
    QoSRecord rec;
    rec.user_id = u;
    rec.rt = 1.0;
    rec.features = {0, 1, 1, 0, 0, 0};
    ds.records.push_back(rec);
  }
  CHECK_THROWS_AS(inject_feature_noise(ds, 0.5, 1), DataError);
}

TEST_CASE("synthetic corpora are reproducible and honor missing fractions") {
  SynthResult a = synth_generate(15, 20, 4, 0.1, 0.25, 31);
  SynthResult b = synth_generate(15, 20, 4, 0.1, 0.25, 31);
  CHECK(a.dataset.records == b.dataset.records);
  CHECK(a.truth.corrupted_users == b.truth.corrupted_users);
  CHECK(a.truth.missing_services == b.truth.missing_services);
  CHECK(a.truth.corrupted_users.size() == 2);
  CHECK(a.truth.missing_services.size() == 5);

  SynthResult all_missing = synth_generate(5, 8, 3, 0.0, 1.0, 2);
  for (const QoSRecord& rec : all_missing.dataset.records) {
    for (std::size_t f = 3; f < kNumFeatures; ++f) {
      CHECK(rec.features[f] == Vocabulary::kMissingId);
    }
  }
}

TEST_CASE("true generating parameters predict near the observation noise") {
  SynthResult synth = synth_generate(40, 50, 4, 0.0, 0.0, 55);
  const SynthTruth& truth = synth.truth;

  double global_mean = 0.0;
  for (const QoSRecord& rec : synth.dataset.records) global_mean += rec.rt;
  global_mean /= static_cast<double>(synth.dataset.records.size());

  double oracle_mae = 0.0;
  double mean_mae = 0.0;
  for (const QoSRecord& rec : synth.dataset.records) {
    const double oracle =
        truth.clean_rt(rec.user_id, rec.service_id) + truth.noise_mean();
    oracle_mae += std::fabs(rec.rt - oracle);
    mean_mae += std::fabs(rec.rt - global_mean);
  }
  oracle_mae /= static_cast<double>(synth.dataset.records.size());
  mean_mae /= static_cast<double>(synth.dataset.records.size());

  CHECK(oracle_mae < 2.0 * truth.noise_mean());
  CHECK(oracle_mae < 0.5 * mean_mae);
}

TEST_CASE("corrupted synthetic users differ from their true features") {
  SynthResult synth = synth_generate(20, 10, 3, 0.3, 0.0, 77);
  REQUIRE(synth.truth.corrupted_users.size() == 6);
  const auto city = static_cast<std::size_t>(Feature::kUserCity);
  const auto as = static_cast<std::size_t>(Feature::kUserAs);
  std::set<std::uint32_t> corrupted(synth.truth.corrupted_users.begin(),
                                    synth.truth.corrupted_users.end());
  for (const QoSRecord& rec : synth.dataset.records) {
    const bool is_corrupted = corrupted.contains(rec.user_id);
    CHECK((rec.features[city] != synth.truth.true_assignments[city][rec.user_id]) ==
          is_corrupted);
    CHECK((rec.features[as] != synth.truth.true_assignments[as][rec.user_id]) ==
          is_corrupted);
  }
}

TEST_SUITE_END();
