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

#include "pdsnet/model.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

namespace pdsnet {

namespace {

constexpr std::string_view kTableNames[kNumEmbedTables] = {
    "user_id", "service_id", "user_as", "service_as", "user_city",
    "service_city"};

std::string weight_name(std::string_view group, std::string_view part) {
  std::string out(group);
  out += '.';
  out += part;
  return out;
}

void append_dense(std::vector<ParamSpec>& layout, std::string_view group,
                  std::size_t in, std::size_t out) {
  layout.push_back({weight_name(group, "w"), {in, out}});
  layout.push_back({weight_name(group, "b"), {out}});
}

double truncated_normal(RngStream& rng, double sd) {
  for (;;) {
    double x = rng.normal(0.0, sd);
    if (x >= -2.0 * sd && x <= 2.0 * sd) return x;
  }
}

std::array<std::vector<std::uint32_t>, kNumEmbedTables> gather_ids(
    std::span<const QoSRecord> batch) {
  std::array<std::vector<std::uint32_t>, kNumEmbedTables> ids;
  for (auto& v : ids) v.reserve(batch.size());
  for (const QoSRecord& r : batch) {
    ids[0].push_back(r.user_id);
    ids[1].push_back(r.service_id);
    ids[2].push_back(r.features[static_cast<std::size_t>(Feature::kUserAs)]);
    ids[3].push_back(r.features[static_cast<std::size_t>(Feature::kServiceAs)]);
    ids[4].push_back(r.features[static_cast<std::size_t>(Feature::kUserCity)]);
    ids[5].push_back(
        r.features[static_cast<std::size_t>(Feature::kServiceCity)]);
  }
  return ids;
}

}  // namespace

Ablation ablation_from_string(std::string_view s) {
  if (s == "full") return Ablation::kFull;
  if (s == "no_prob") return Ablation::kNoProb;
  if (s == "no_deep_sup") return Ablation::kNoDeepSup;
  throw std::invalid_argument("unknown ablation: " + std::string(s));
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull:
      return "full";
    case Ablation::kNoProb:
      return "no_prob";
    case Ablation::kNoDeepSup:
      return "no_deep_sup";
  }
  throw std::invalid_argument("bad ablation value");
}

std::string_view embed_table_name(EmbedTable t) {
  return kTableNames[static_cast<std::size_t>(t)];
}

void PdsNetConfig::validate() const {
  if (latent_dim == 0) throw std::invalid_argument("latent_dim must be > 0");
  if (embed_exp == 0 || embed_exp > 20)
    throw std::invalid_argument("embed_exp must be in [1, 20]");
  for (std::size_t v : vocab_sizes)
    if (v == 0) throw std::invalid_argument("vocab sizes must be > 0");
  if (prior_hidden == 0 || posterior_hidden == 0)
    throw std::invalid_argument("hidden widths must be > 0");
  for (std::size_t w : head_widths)
    if (w == 0) throw std::invalid_argument("head widths must be > 0");
}

void set_vocab_sizes(PdsNetConfig& config, const Dataset& dataset) {
  config.vocab_sizes[0] = dataset.n_users;
  config.vocab_sizes[1] = dataset.n_services;
  config.vocab_sizes[2] = dataset.vocabs[Feature::kUserAs].size();
  config.vocab_sizes[3] = dataset.vocabs[Feature::kServiceAs].size();
  config.vocab_sizes[4] = dataset.vocabs[Feature::kUserCity].size();
  config.vocab_sizes[5] = dataset.vocabs[Feature::kServiceCity].size();
}

std::vector<ParamSpec> param_layout(const PdsNetConfig& config) {
  config.validate();
  const std::size_t d = config.embed_dim();
  const std::size_t n2 = 2 * config.latent_dim;
  std::vector<ParamSpec> layout;
  for (std::size_t t = 0; t < kNumEmbedTables; ++t) {
    layout.push_back(
        {weight_name("embed", kTableNames[t]), {config.vocab_sizes[t], d}});
  }
  const std::size_t prior_in[3] = {config.fused_dim(), config.head_widths[0],
                                   config.head_widths[1]};
  for (int level = 0; level < 3; ++level) {
    std::string group = "prior" + std::to_string(level + 1);
    append_dense(layout, group + ".hidden", prior_in[level],
                 config.prior_hidden);
    append_dense(layout, group + ".heads", config.prior_hidden, n2);
  }
  append_dense(layout, "posterior.hidden", 1, config.posterior_hidden);
  append_dense(layout, "posterior.heads", config.posterior_hidden, n2);
  const std::size_t fused = config.latent_dim + config.fused_dim();
  append_dense(layout, "head.fc1", fused, config.head_widths[0]);
  append_dense(layout, "head.fc2", config.head_widths[0],
               config.head_widths[1]);
  append_dense(layout, "head.fc3", config.head_widths[1],
               config.head_widths[2]);
  append_dense(layout, "head.out", config.head_widths[2], 1);
  return layout;
}

std::size_t param_count(const PdsNetConfig& config) {
  std::size_t total = 0;
  for (const ParamSpec& spec : param_layout(config))
    total += ad::shape_size(spec.shape);
  return total;
}

ParamStore::ParamStore(std::vector<ParamSpec> layout) {
  entries_.reserve(layout.size());
  for (ParamSpec& spec : layout) {
    const std::size_t count = ad::shape_size(spec.shape);
    index_.emplace(spec.name, entries_.size());
    entries_.push_back({std::move(spec), std::vector<double>(count, 0.0)});
    total_ += count;
  }
}

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

PdsNet::PdsNet(PdsNetConfig config)
    : config_(std::move(config)), store_(param_layout(config_)) {}

void PdsNet::init_params(std::uint64_t seed) {
  for (std::size_t i = 0; i < store_.size(); ++i) {
    const ParamSpec& spec = store_.spec(i);
    std::vector<double>& value = store_.values(i);
    RngStream rng(derive_seed(seed, spec.name));
    if (spec.name.starts_with("embed.")) {
      for (double& v : value) v = rng.uniform(-0.05, 0.05);
    } else if (spec.name.ends_with(".b")) {
      for (double& v : value) v = 0.0;
    } else {
      for (double& v : value) v = truncated_normal(rng, 0.05);
    }
  }
}

BoundParams PdsNet::bind(ad::Graph& g) const {
  BoundParams bound;
  bound.leaves.reserve(store_.size());
  for (std::size_t i = 0; i < store_.size(); ++i) {
    bound.leaves.push_back(g.input(store_.spec(i).shape, store_.values(i)));
  }
  return bound;
}

ad::Tensor PdsNet::leaf(const BoundParams& p, std::string_view name) const {
  return p.leaves[store_.index_of(name)];
}

ad::Tensor PdsNet::embed_concat(ad::Graph& g, const BoundParams& p,
                                std::span<const QoSRecord> batch) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto ids = gather_ids(batch);
  std::vector<ad::Tensor> parts;
  parts.reserve(kNumEmbedTables);
  for (std::size_t t = 0; t < kNumEmbedTables; ++t) {
    ad::Tensor table = leaf(p, weight_name("embed", kTableNames[t]));
    parts.push_back(g.embed(table, ids[t]));
  }
  return g.concat(parts);
}

DiagGaussian PdsNet::prior_forward(ad::Graph& g, const BoundParams& p,
                                   const ad::Tensor& h, int level) const {
  if (level < 1 || level > 3)
    throw std::invalid_argument("prior level must be 1, 2, or 3");
  const std::string group = "prior" + std::to_string(level);
  ad::Tensor hidden = g.dense(h, leaf(p, group + ".hidden.w"),
                              leaf(p, group + ".hidden.b"), ad::Activation::kRelu);
  ad::Tensor heads = g.dense(hidden, leaf(p, group + ".heads.w"),
                             leaf(p, group + ".heads.b"), ad::Activation::kLinear);
  return from_heads(g, heads);
}

DiagGaussian PdsNet::posterior_forward(ad::Graph& g, const BoundParams& p,
                                       const ad::Tensor& y) const {
  ad::Tensor hidden = g.dense(y, leaf(p, "posterior.hidden.w"),
                              leaf(p, "posterior.hidden.b"),
                              ad::Activation::kRelu);
  ad::Tensor heads = g.dense(hidden, leaf(p, "posterior.heads.w"),
                             leaf(p, "posterior.heads.b"),
                             ad::Activation::kLinear);
  return from_heads(g, heads);
}

PdsNet::HeadOut PdsNet::head_forward(ad::Graph& g, const BoundParams& p,
                                     const ad::Tensor& fused) const {
  HeadOut out;
  out.x1 = g.dense(fused, leaf(p, "head.fc1.w"), leaf(p, "head.fc1.b"),
                   ad::Activation::kRelu);
  out.x2 = g.dense(out.x1, leaf(p, "head.fc2.w"), leaf(p, "head.fc2.b"),
                   ad::Activation::kRelu);
  out.x3 = g.dense(out.x2, leaf(p, "head.fc3.w"), leaf(p, "head.fc3.b"),
                   ad::Activation::kRelu);
  out.y = g.dense(out.x3, leaf(p, "head.out.w"), leaf(p, "head.out.b"),
                  ad::Activation::kLinear);
  return out;
}

ForwardTrace PdsNet::predict_main(ad::Graph& g, const BoundParams& p,
                                  std::span<const QoSRecord> batch,
                                  RngStream& rng, RunMode mode,
                                  bool eval_use_mean) const {
  ForwardTrace trace;
  trace.c = embed_concat(g, p, batch);
  DiagGaussian p1 = prior_forward(g, p, trace.c, 1);
  if (config_.ablation == Ablation::kNoProb) {
    trace.z1 = p1.mu;
  } else if (mode == RunMode::kEval && eval_use_mean) {
    trace.z1 = p1.mu;
  } else {
    trace.z1 = sample(g, p1, rng);
  }
  ad::Tensor fused = g.concat({trace.z1, trace.c});
  HeadOut head = head_forward(g, p, fused);
  trace.x1 = head.x1;
  trace.x2 = head.x2;
  trace.x3 = head.x3;
  trace.y1 = head.y;
  trace.priors[0] = std::move(p1);
  if (config_.ablation != Ablation::kNoDeepSup) {
    trace.priors[1] = prior_forward(g, p, trace.x1, 2);
    trace.priors[2] = prior_forward(g, p, trace.x2, 3);
  }
  return trace;
}

ForwardTrace PdsNet::predict_posterior(ad::Graph& g, const BoundParams& p,
                                       std::span<const QoSRecord> batch,
                                       std::span<const double> y,
                                       RngStream& rng, RunMode mode) const {
  if (mode == RunMode::kEval)
    throw std::logic_error(
        "the label-conditioned branch is only defined in training mode");
  if (y.size() != batch.size())
    throw std::invalid_argument("label count does not match batch size");
  ForwardTrace trace = predict_main(g, p, batch, rng, mode);
  if (config_.ablation == Ablation::kNoDeepSup) return trace;
  ad::Tensor labels = g.input({batch.size(), 1}, y);
  DiagGaussian pr = posterior_forward(g, p, labels);
  if (config_.ablation == Ablation::kNoProb) {
    trace.zr = pr.mu;
  } else {
    trace.zr = sample(g, pr, rng);
  }
  trace.posterior = std::move(pr);
  ad::Tensor fused = g.concat({trace.zr, trace.c});
  trace.y2 = head_forward(g, p, fused).y;
  return trace;
}

std::vector<double> PdsNet::predict(std::span<const QoSRecord> batch,
                                    RngStream& rng, bool eval_use_mean) const {
  constexpr std::size_t kChunk = 256;
  std::vector<double> out;
  out.reserve(batch.size());
  for (std::size_t begin = 0; begin < batch.size(); begin += kChunk) {
    const std::size_t end = std::min(begin + kChunk, batch.size());
    ad::Graph g;
    BoundParams p = bind(g);
    ForwardTrace trace = predict_main(g, p, batch.subspan(begin, end - begin),
                                      rng, RunMode::kEval, eval_use_mean);
    auto values = trace.y1.value();
    out.insert(out.end(), values.begin(), values.end());
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blocks are little-endian");

void manifest_line(std::ostringstream& out, std::string_view key,
                   std::string_view value) {
  out << key << ' ' << value << '\n';
}

std::vector<std::string> manifest_tokens(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw CheckpointError("truncated checkpoint manifest");
  std::vector<std::string> tokens;
  std::istringstream ls(line);
  std::string tok;
  while (ls >> tok) tokens.push_back(tok);
  return tokens;
}

std::size_t parse_size(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw CheckpointError("bad integer in checkpoint: " + s);
  return static_cast<std::size_t>(v);
}

std::vector<std::string> expect_key(std::istream& in, std::string_view key,
                                    std::size_t min_values) {
  std::vector<std::string> tokens = manifest_tokens(in);
  if (tokens.empty() || tokens[0] != key)
    throw CheckpointError("checkpoint manifest missing key: " +
                          std::string(key));
  if (tokens.size() < min_values + 1)
    throw CheckpointError("checkpoint manifest key too short: " +
                          std::string(key));
  return tokens;
}

}  // namespace

void save_params(const PdsNet& model, const std::string& path) {
  const PdsNetConfig& c = model.config();
  const ParamStore& store = model.store();
  std::ostringstream manifest;
  manifest << "pdsnet-params v1\n";
  manifest_line(manifest, "latent_dim", std::to_string(c.latent_dim));
  manifest_line(manifest, "embed_exp", std::to_string(c.embed_exp));
  manifest << "vocab";
  for (std::size_t v : c.vocab_sizes) manifest << ' ' << v;
  manifest << '\n';
  manifest_line(manifest, "prior_hidden", std::to_string(c.prior_hidden));
  manifest_line(manifest, "posterior_hidden",
                std::to_string(c.posterior_hidden));
  manifest << "head_widths";
  for (std::size_t w : c.head_widths) manifest << ' ' << w;
  manifest << '\n';
  manifest_line(manifest, "ablation", to_string(c.ablation));
  manifest_line(manifest, "total_params", std::to_string(store.total_values()));
  manifest_line(manifest, "tensors", std::to_string(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    manifest << store.spec(i).name;
    for (std::size_t dim : store.spec(i).shape) manifest << ' ' << dim;
    manifest << '\n';
  }
  manifest << "data\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  const std::string header = manifest.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::vector<double>& value = store.values(i);
    out.write(reinterpret_cast<const char*>(value.data()),
              static_cast<std::streamsize>(value.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("checkpoint write failed: " + path);
}

PdsNet load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  {
    std::vector<std::string> magic = manifest_tokens(in);
    if (magic.size() != 2 || magic[0] != "pdsnet-params" || magic[1] != "v1")
      throw CheckpointError("not a pdsnet-params v1 checkpoint: " + path);
  }
  PdsNetConfig config;
  config.latent_dim = parse_size(expect_key(in, "latent_dim", 1)[1]);
  config.embed_exp = parse_size(expect_key(in, "embed_exp", 1)[1]);
  {
    std::vector<std::string> tokens =
        expect_key(in, "vocab", kNumEmbedTables);
    for (std::size_t t = 0; t < kNumEmbedTables; ++t)
      config.vocab_sizes[t] = parse_size(tokens[t + 1]);
  }
  config.prior_hidden = parse_size(expect_key(in, "prior_hidden", 1)[1]);
  config.posterior_hidden =
      parse_size(expect_key(in, "posterior_hidden", 1)[1]);
  {
    std::vector<std::string> tokens = expect_key(in, "head_widths", 3);
    for (std::size_t i = 0; i < 3; ++i)
      config.head_widths[i] = parse_size(tokens[i + 1]);
  }
  config.ablation = ablation_from_string(expect_key(in, "ablation", 1)[1]);
  const std::size_t total = parse_size(expect_key(in, "total_params", 1)[1]);
  const std::size_t tensors = parse_size(expect_key(in, "tensors", 1)[1]);

  PdsNet model(config);
  ParamStore& store = model.store();
  if (tensors != store.size())
    throw CheckpointError("checkpoint tensor count mismatch");
  if (total != store.total_values())
    throw CheckpointError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::vector<std::string> tokens = manifest_tokens(in);
    const ParamSpec& spec = store.spec(i);
    if (tokens.empty() || tokens[0] != spec.name)
      throw CheckpointError("checkpoint tensor order mismatch at " +
                            spec.name);
    if (tokens.size() != spec.shape.size() + 1)
      throw CheckpointError("checkpoint shape rank mismatch at " + spec.name);
    for (std::size_t d = 0; d < spec.shape.size(); ++d)
      if (parse_size(tokens[d + 1]) != spec.shape[d])
        throw CheckpointError("checkpoint shape mismatch at " + spec.name);
  }
  {
    std::vector<std::string> tokens = manifest_tokens(in);
    if (tokens.size() != 1 || tokens[0] != "data")
      throw CheckpointError("checkpoint manifest missing data marker");
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::vector<double>& value = store.values(i);
    in.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * sizeof(double)));
    if (in.gcount() !=
        static_cast<std::streamsize>(value.size() * sizeof(double)))
      throw CheckpointError("truncated checkpoint data: " + path);
  }
  return model;
}

PdsNet load_params(const std::string& path, const PdsNetConfig& expect) {
  PdsNet model = load_params(path);
  const PdsNetConfig& got = model.config();
  auto mismatch = [&](std::string_view field, std::size_t a, std::size_t b) {
    throw CheckpointError("checkpoint fingerprint mismatch: " +
                          std::string(field) + " is " + std::to_string(a) +
                          ", expected " + std::to_string(b));
  };
  if (got.latent_dim != expect.latent_dim)
    mismatch("latent_dim", got.latent_dim, expect.latent_dim);
  if (got.embed_exp != expect.embed_exp)
    mismatch("embed_exp", got.embed_exp, expect.embed_exp);
  for (std::size_t t = 0; t < kNumEmbedTables; ++t)
    if (got.vocab_sizes[t] != expect.vocab_sizes[t])
      mismatch(kTableNames[t], got.vocab_sizes[t], expect.vocab_sizes[t]);
  return model;
}

}  // namespace pdsnet
