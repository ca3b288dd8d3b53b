#include "formats.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace residpo::io {

namespace {

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("missing or malformed field '") + key + "': " + e.what());
  }
}

json matrix(std::span<const double> flat, size_t rows, size_t cols) {
  json out = json::array();
  for (size_t r = 0; r < rows; ++r) {
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                      flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
  }
  return out;
}

void read_matrix(const json& j, const char* key, std::span<double> dest, size_t rows, size_t cols) {
  const auto m = get<std::vector<std::vector<double>>>(j, key);
  if (m.size() != rows) throw DataError(std::string("checkpoint field '") + key + "' has wrong row count");
  for (size_t r = 0; r < rows; ++r) {
    if (m[r].size() != cols) throw DataError(std::string("checkpoint field '") + key + "' has wrong column count");
    std::copy(m[r].begin(), m[r].end(), dest.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
}

void read_vector(const json& j, const char* key, std::span<double> dest) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != dest.size()) throw DataError(std::string("checkpoint field '") + key + "' has wrong length");
  std::copy(v.begin(), v.end(), dest.begin());
}

}  // namespace

json to_json(const StructureInstance& s) {
  json feats = json::array();
  for (const auto& f : s.features) feats.push_back(std::vector<double>(f.begin(), f.end()));
  return {{"id", s.id}, {"length", s.length()}, {"features", feats}};
}

StructureInstance structure_from_json(const json& j) {
  StructureInstance s;
  s.id = get<std::string>(j, "id");
  const auto feats = get<std::vector<std::vector<double>>>(j, "features");
  for (const auto& f : feats) {
    if (f.size() != kFeatureDim) throw DataError("structure '" + s.id + "' has a feature vector of wrong dimension");
    FeatureVector v{};
    std::copy(f.begin(), f.end(), v.begin());
    s.features.push_back(v);
  }
  if (get<int>(j, "length") != s.length()) throw DataError("structure '" + s.id + "' length field disagrees");
  validate(s);
  return s;
}

json native_to_json(const std::string& structure_id, const Sequence& native) {
  return {{"structure_id", structure_id}, {"sequence", to_string(native)}};
}

json to_json(const HiddenTargetMap& map) {
  json w = json::array();
  for (const auto& row : map.weights) w.push_back(std::vector<double>(row.begin(), row.end()));
  return {{"file_role", kRoleOraclePrivate},
          {"format_version", kFormatVersion},
          {"W_star", w},
          {"native_bias", std::vector<double>(map.native_bias.begin(), map.native_bias.end())}};
}

HiddenTargetMap hidden_map_from_json(const json& j) {
  if (get<std::string>(j, "file_role") != kRoleOraclePrivate) throw DataError("not a hidden map file");
  HiddenTargetMap m;
  const auto w = get<std::vector<std::vector<double>>>(j, "W_star");
  if (w.size() != kNumAminoAcids) throw DataError("hidden map must have 20 rows");
  for (size_t a = 0; a < w.size(); ++a) {
    if (w[a].size() != kFeatureDim) throw DataError("hidden map rows must have 8 columns");
    std::copy(w[a].begin(), w[a].end(), m.weights[a].begin());
  }
  const auto b = get<std::vector<double>>(j, "native_bias");
  if (b.size() != kNumAminoAcids) throw DataError("hidden map native_bias must have 20 entries");
  std::copy(b.begin(), b.end(), m.native_bias.begin());
  return m;
}

json scored_to_json(const ScoredSequence& s, int sample_index) {
  return {{"structure_id", s.structure_id},
          {"sample_index", sample_index},
          {"sequence", to_string(s.residues)},
          {"plddt", s.plddt},
          {"mean_plddt", s.mean_plddt}};
}

ScoredSequence scored_from_json(const json& j, int* sample_index) {
  auto s = make_scored(get<std::string>(j, "structure_id"), parse_sequence(get<std::string>(j, "sequence")),
                       get<std::vector<double>>(j, "plddt"));
  if (std::abs(s.mean_plddt - get<double>(j, "mean_plddt")) > 1e-9) {
    throw DataError("mean_plddt disagrees with the per-residue scores for '" + s.structure_id + "'");
  }
  if (sample_index) *sample_index = get<int>(j, "sample_index");
  return s;
}

json to_json(const PreferencePair& p) {
  return {{"structure_id", p.structure_id},
          {"winner_index", p.winner_index},
          {"loser_index", p.loser_index},
          {"strategy", to_string(p.strategy)},
          {"score_gap", p.score_gap}};
}

PreferencePair pair_from_json(const json& j) {
  PreferencePair p;
  p.structure_id = get<std::string>(j, "structure_id");
  p.winner_index = get<int>(j, "winner_index");
  p.loser_index = get<int>(j, "loser_index");
  try {
    p.strategy = parse_strategy(get<std::string>(j, "strategy"));
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  p.score_gap = get<double>(j, "score_gap");
  return p;
}

json to_json(const DatasetSplit& split) {
  return {{"file_role", kRoleSplit}, {"train_ids", split.train_ids}, {"val_ids", split.val_ids}};
}

DatasetSplit split_from_json(const json& j) {
  return {get<std::vector<std::string>>(j, "train_ids"), get<std::vector<std::string>>(j, "val_ids")};
}

json to_json(const LossHyperparams& h) {
  return {{"alpha", h.alpha}, {"beta_thresh", h.beta_thresh}, {"gamma", h.gamma}, {"lambda", h.lambda},
          {"beta_dpo", h.beta_dpo}};
}

json to_json(const TrainConfig& c) {
  json j = to_json(c.hyper);
  j["loss"] = to_string(c.loss);
  j["learning_rate"] = c.learning_rate;
  j["total_steps"] = c.total_steps;
  j["warmup_fraction"] = c.warmup_fraction;
  j["batch_size"] = c.batch_size;
  j["grad_accum"] = c.grad_accum;
  j["adam_betas"] = {c.adam_beta1, c.adam_beta2};
  j["adam_epsilon"] = c.adam_epsilon;
  j["master_seed"] = c.master_seed;
  return j;
}

namespace {

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.loss = parse_loss_kind(get<std::string>(j, "loss"));
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  c.hyper.alpha = get<double>(j, "alpha");
  c.hyper.beta_thresh = get<double>(j, "beta_thresh");
  c.hyper.gamma = get<double>(j, "gamma");
  c.hyper.lambda = get<double>(j, "lambda");
  c.hyper.beta_dpo = get<double>(j, "beta_dpo");
  c.learning_rate = get<double>(j, "learning_rate");
  c.total_steps = get<int>(j, "total_steps");
  c.warmup_fraction = get<double>(j, "warmup_fraction");
  c.batch_size = get<int>(j, "batch_size");
  c.grad_accum = get<int>(j, "grad_accum");
  const auto betas = get<std::vector<double>>(j, "adam_betas");
  if (betas.size() != 2) throw DataError("adam_betas must have two entries");
  c.adam_beta1 = betas[0];
  c.adam_beta2 = betas[1];
  c.adam_epsilon = get<double>(j, "adam_epsilon");
  c.master_seed = get<std::uint64_t>(j, "master_seed");
  return c;
}

}  // namespace

json to_json(const MetricRecord& r) {
  return {{"step", r.step}, {"lr", r.lr}, {"loss", r.loss}, {"rpl", r.rpl}, {"rcl", r.rcl},
          {"fallback_fraction", r.fallback_fraction}};
}

MetricRecord metric_from_json(const json& j) {
  return {get<int>(j, "step"), get<double>(j, "lr"), get<double>(j, "loss"), get<double>(j, "rpl"),
          get<double>(j, "rcl"), get<double>(j, "fallback_fraction")};
}

json to_json(const Checkpoint& c) {
  const auto& p = c.params;
  json params = {{"W1", matrix(p.W1(), PolicyParams::kHidden, PolicyParams::kInput)},
                 {"b1", std::vector<double>(p.b1().begin(), p.b1().end())},
                 {"W2", matrix(p.W2(), kNumAminoAcids, PolicyParams::kHidden)},
                 {"b2", std::vector<double>(p.b2().begin(), p.b2().end())}};
  json tail = json::array();
  for (const auto& r : c.metric_tail) tail.push_back(to_json(r));
  return {{"file_role", kRoleCheckpoint},
          {"format_version", kFormatVersion},
          {"params", params},
          {"optimizer_state", {{"m", c.optimizer.m}, {"v", c.optimizer.v}, {"t", c.optimizer.t}}},
          {"step", c.step},
          {"config", to_json(c.config)},
          {"metric_tail", tail}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (get<int>(j, "format_version") != kFormatVersion) throw DataError("unsupported checkpoint format_version");
  Checkpoint c;
  const auto& params = j.at("params");
  auto flat = c.params.flat();
  read_matrix(params, "W1", flat.subspan(PolicyParams::kW1, PolicyParams::kB1 - PolicyParams::kW1),
              PolicyParams::kHidden, PolicyParams::kInput);
  read_vector(params, "b1", flat.subspan(PolicyParams::kB1, PolicyParams::kHidden));
  read_matrix(params, "W2", flat.subspan(PolicyParams::kW2, PolicyParams::kB2 - PolicyParams::kW2),
              kNumAminoAcids, PolicyParams::kHidden);
  read_vector(params, "b2", flat.subspan(PolicyParams::kB2, kNumAminoAcids));
  require_finite(c.params.flat(), "params");
  const auto& opt = j.at("optimizer_state");
  c.optimizer.m = get<std::vector<double>>(opt, "m");
  c.optimizer.v = get<std::vector<double>>(opt, "v");
  c.optimizer.t = get<std::int64_t>(opt, "t");
  if (c.optimizer.m.size() != PolicyParams::kCount || c.optimizer.v.size() != PolicyParams::kCount) {
    throw DataError("checkpoint optimizer moments have wrong length");
  }
  c.step = get<int>(j, "step");
  c.config = train_config_from_json(j.at("config"));
  for (const auto& r : j.at("metric_tail")) c.metric_tail.push_back(metric_from_json(r));
  return c;
}

json to_json(const EvalReport& r) {
  return {{"plddt_accuracy", r.plddt_accuracy},
          {"seq_recovery", r.seq_recovery},
          {"mean_design_plddt", r.mean_design_plddt},
          {"success_rate", r.success_rate},
          {"backbone_success_rate", r.backbone_success_rate},
          {"n_pairs", r.n_pairs},
          {"n_structures", r.n_structures}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.plddt_accuracy = get<double>(j, "plddt_accuracy");
  r.seq_recovery = get<double>(j, "seq_recovery");
  r.mean_design_plddt = get<double>(j, "mean_design_plddt");
  r.success_rate = get<double>(j, "success_rate");
  r.backbone_success_rate = get<double>(j, "backbone_success_rate");
  r.n_pairs = get<int>(j, "n_pairs");
  r.n_structures = get<int>(j, "n_structures");
  return r;
}

json to_json(const CompositionReport& r) {
  json letters = json::array();
  for (char c : AminoAcid::kAlphabet) letters.push_back(std::string(1, c));
  json sub = json::array();
  for (const auto& row : r.substitution) sub.push_back(std::vector<double>(row.begin(), row.end()));
  return {{"alphabet", letters},
          {"ref_frequency", std::vector<double>(r.ref_frequency.begin(), r.ref_frequency.end())},
          {"tuned_frequency", std::vector<double>(r.tuned_frequency.begin(), r.tuned_frequency.end())},
          {"substitution", sub},
          {"row_supported", std::vector<bool>(r.row_supported.begin(), r.row_supported.end())}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(1) + "\n"); }

std::vector<json> read_jsonl(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError("'" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
  std::string buf;
  for (const auto& l : lines) {
    buf += l.dump();
    buf += '\n';
  }
  write_file(path, buf);
}

void reject_oracle_private(const fs::path& path) {
  const std::string text = read_file(path);
  const auto first_line = text.substr(0, text.find('\n'));
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) doc = json::parse(first_line, nullptr, false);
  if (doc.is_object() && doc.value("file_role", "") == kRoleOraclePrivate) {
    throw ConfigError("'" + path.string() + "' is the oracle-private hidden map; training commands may not read it");
  }
}

std::string digest(const fs::path& path) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(read_file(path))));
  return std::string("fnv1a64:") + buf;
}

DatasetFiles DatasetFiles::in(const fs::path& dir) {
  return {dir / "structures.jsonl", dir / "natives.jsonl", dir / "hidden_map.json", dir / "split.json"};
}

std::vector<StructureInstance> load_structures(const fs::path& path) {
  std::vector<StructureInstance> out;
  for (const auto& j : read_jsonl(path)) out.push_back(structure_from_json(j));
  return out;
}

std::vector<Sequence> load_natives(const fs::path& path, const std::vector<StructureInstance>& structures) {
  std::unordered_map<std::string, Sequence> by_id;
  for (const auto& j : read_jsonl(path)) {
    by_id[get<std::string>(j, "structure_id")] = parse_sequence(get<std::string>(j, "sequence"));
  }
  std::vector<Sequence> out;
  for (const auto& s : structures) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw DataError("missing native sequence for structure '" + s.id + "'");
    if (static_cast<int>(it->second.size()) != s.length()) {
      throw DataError("native sequence length mismatch for structure '" + s.id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::vector<ScoredSequence>> load_pools(const fs::path& path,
                                                    const std::vector<StructureInstance>& structures) {
  std::unordered_map<std::string, std::map<int, ScoredSequence>> grouped;
  for (const auto& j : read_jsonl(path)) {
    int k = 0;
    auto s = scored_from_json(j, &k);
    grouped[s.structure_id].emplace(k, std::move(s));
  }
  std::vector<std::vector<ScoredSequence>> out;
  for (const auto& s : structures) {
    std::vector<ScoredSequence> pool;
    if (auto it = grouped.find(s.id); it != grouped.end()) {
      int expect = 0;
      for (auto& [k, seq] : it->second) {
        if (k != expect++) throw DataError("sample indices for '" + s.id + "' are not contiguous from 0");
        if (static_cast<int>(seq.residues.size()) != s.length()) {
          throw DataError("sequence length mismatch for structure '" + s.id + "'");
        }
        pool.push_back(seq);
      }
    }
    out.push_back(std::move(pool));
  }
  return out;
}

std::vector<PreferencePair> load_pairs(const fs::path& path) {
  std::vector<PreferencePair> out;
  for (const auto& j : read_jsonl(path)) out.push_back(pair_from_json(j));
  return out;
}

}  // namespace residpo::io
