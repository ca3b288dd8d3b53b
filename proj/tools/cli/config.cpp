#include "config.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>

#include "formats.hpp"

namespace residpo::cli {

using nlohmann::json;

namespace {

class Parser {
 public:
  template <typename T>
  void field(const json& doc, const std::string& key, T& dest, std::set<std::string>& seen) {
    if (!doc.contains(key)) return;
    seen.insert(key);
    try {
      dest = doc.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  void fail(const std::string& key, const std::string& why) { errors_.push_back("'" + key + "' " + why); }

  void check(bool ok, const std::string& key, const std::string& why) {
    if (!ok) fail(key, why);
  }

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

void parse_train(const json& doc, TrainConfig& c, Parser& p, std::set<std::string>& seen, const std::string& prefix) {
  std::string loss;
  p.field(doc, "loss", loss, seen);
  if (!loss.empty()) {
    try {
      c.loss = parse_loss_kind(loss);
    } catch (const ConfigError& e) {
      p.fail(prefix + "loss", e.what());
    }
  }
  p.field(doc, "alpha", c.hyper.alpha, seen);
  p.field(doc, "beta_thresh", c.hyper.beta_thresh, seen);
  p.field(doc, "gamma", c.hyper.gamma, seen);
  p.field(doc, "lambda", c.hyper.lambda, seen);
  p.field(doc, "beta_dpo", c.hyper.beta_dpo, seen);
  p.field(doc, "learning_rate", c.learning_rate, seen);
  p.field(doc, "total_steps", c.total_steps, seen);
  p.field(doc, "warmup_fraction", c.warmup_fraction, seen);
  p.field(doc, "batch_size", c.batch_size, seen);
  p.field(doc, "grad_accum", c.grad_accum, seen);
  p.field(doc, "adam_epsilon", c.adam_epsilon, seen);
  p.field(doc, "master_seed", c.master_seed, seen);
  std::vector<double> betas;
  p.field(doc, "adam_betas", betas, seen);
  if (doc.contains("adam_betas") && betas.size() != 2) {
    p.fail(prefix + "adam_betas", "must have two entries");
  } else if (betas.size() == 2) {
    c.adam_beta1 = betas[0];
    c.adam_beta2 = betas[1];
  }

  const auto& h = c.hyper;
  p.check(h.alpha >= 0.0, prefix + "alpha", "must be >= 0");
  p.check(h.beta_thresh > 0.0 && h.beta_thresh <= 100.0, prefix + "beta_thresh", "must lie in (0, 100]");
  p.check(h.gamma >= 0.0 && h.gamma <= 1.0, prefix + "gamma", "must lie in [0, 1]");
  p.check(h.lambda >= 0.0, prefix + "lambda", "must be >= 0");
  p.check(h.beta_dpo > 0.0, prefix + "beta_dpo", "must be > 0");
  p.check(c.learning_rate > 0.0, prefix + "learning_rate", "must be > 0");
  p.check(c.total_steps > 0, prefix + "total_steps", "must be > 0");
  p.check(c.warmup_fraction > 0.0 && c.warmup_fraction < 1.0, prefix + "warmup_fraction", "must lie in (0, 1)");
  p.check(c.batch_size > 0, prefix + "batch_size", "must be > 0");
  p.check(c.grad_accum > 0, prefix + "grad_accum", "must be > 0");
  p.check(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0 && c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0,
          prefix + "adam_betas", "must lie in [0, 1)");
  p.check(c.adam_epsilon > 0.0, prefix + "adam_epsilon", "must be > 0");
}

void reject_unknown(const json& doc, const std::set<std::string>& seen, Parser& p, const std::string& prefix) {
  for (const auto& [key, value] : doc.items()) {
    if (!seen.count(key)) p.fail(prefix + key, "is not a recognised configuration key");
  }
}

CellSpec parse_cell(const json& doc, const LossHyperparams& defaults, Parser& p, const std::string& prefix) {
  CellSpec cell;
  cell.hyper = defaults;
  std::set<std::string> seen;
  p.field(doc, "name", cell.name, seen);
  p.field(doc, "reference_only", cell.reference_only, seen);
  std::string strategy;
  p.field(doc, "strategy", strategy, seen);
  if (!strategy.empty()) {
    try {
      cell.strategy = parse_strategy(strategy);
    } catch (const ConfigError& e) {
      p.fail(prefix + "strategy", e.what());
    }
  }
  std::string loss;
  p.field(doc, "loss", loss, seen);
  if (!loss.empty()) {
    try {
      cell.loss = parse_loss_kind(loss);
    } catch (const ConfigError& e) {
      p.fail(prefix + "loss", e.what());
    }
  }
  p.field(doc, "alpha", cell.hyper.alpha, seen);
  p.field(doc, "beta_thresh", cell.hyper.beta_thresh, seen);
  p.field(doc, "gamma", cell.hyper.gamma, seen);
  p.field(doc, "lambda", cell.hyper.lambda, seen);
  p.field(doc, "beta_dpo", cell.hyper.beta_dpo, seen);
  int n = 0;
  p.field(doc, "n_train_structures", n, seen);
  if (n > 0) cell.n_train_structures = n;
  if (cell.name.empty()) cell.name = std::string(to_string(cell.strategy)) + "/" + std::string(to_string(cell.loss));
  reject_unknown(doc, seen, p, prefix);
  return cell;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig cfg;
  Parser p;
  std::set<std::string> seen;
  auto& ex = cfg.experiment;

  parse_train(doc, ex.finetune, p, seen, "");
  if (ex.finetune.loss == LossKind::Pretrain) p.fail("loss", "must name a preference loss (dpo, rpl, residpo)");

  if (doc.contains("pretrain")) {
    seen.insert("pretrain");
    const auto& sub = doc.at("pretrain");
    if (!sub.is_object()) {
      p.fail("pretrain", "must be an object");
    } else {
      std::set<std::string> sub_seen;
      parse_train(sub, ex.pretrain, p, sub_seen, "pretrain.");
      reject_unknown(sub, sub_seen, p, "pretrain.");
      ex.pretrain.loss = LossKind::Pretrain;
    }
  }

  p.field(doc, "window_radius", ex.oracle.window_radius, seen);
  p.check(ex.oracle.window_radius >= 0 && ex.oracle.window_radius <= 8, "window_radius", "must lie in [0, 8]");

  p.field(doc, "n_structures", ex.dataset.n_structures, seen);
  p.check(ex.dataset.n_structures >= 1, "n_structures", "must be >= 1");
  std::vector<int> range;
  p.field(doc, "length_range", range, seen);
  if (doc.contains("length_range")) {
    if (range.size() != 2) {
      p.fail("length_range", "must be [min, max]");
    } else {
      ex.dataset.lengths = {range[0], range[1]};
    }
  }
  p.check(ex.dataset.lengths.min >= kMinLength && ex.dataset.lengths.max <= kMaxLength &&
              ex.dataset.lengths.min <= ex.dataset.lengths.max,
          "length_range", "must satisfy 8 <= min <= max <= 512");
  p.field(doc, "val_fraction", ex.dataset.val_fraction, seen);
  p.check(ex.dataset.val_fraction > 0.0 && ex.dataset.val_fraction < 1.0, "val_fraction", "must lie in (0, 1)");
  p.field(doc, "native_bias_scale", ex.dataset.native_bias_scale, seen);
  p.check(ex.dataset.native_bias_scale >= 0.0, "native_bias_scale", "must be >= 0");

  p.field(doc, "n_samples", ex.n_samples, seen);
  p.check(ex.n_samples >= 2, "n_samples", "must be >= 2");
  p.field(doc, "sample_temperature", ex.sample_temperature, seen);
  p.check(ex.sample_temperature > 0.0, "sample_temperature", "must be > 0");

  std::string strategy;
  p.field(doc, "strategy", strategy, seen);
  if (!strategy.empty()) {
    try {
      cfg.strategy = parse_strategy(strategy);
    } catch (const ConfigError& e) {
      p.fail("strategy", e.what());
    }
  }
  auto& pp = ex.pair_params;
  p.field(doc, "delta", pp.delta, seen);
  p.check(pp.delta >= 0.0, "delta", "must be >= 0");
  p.field(doc, "application_hi", pp.application_hi, seen);
  p.field(doc, "application_lo", pp.application_lo, seen);
  p.check(pp.application_hi > pp.application_lo, "application_hi", "must exceed application_lo");
  p.field(doc, "rejection_k", pp.rejection_k, seen);
  p.check(pp.rejection_k >= 1, "rejection_k", "must be >= 1");
  p.field(doc, "relative_cap", pp.relative_cap, seen);
  p.check(pp.relative_cap >= 0, "relative_cap", "must be >= 0");
  p.field(doc, "val_delta", ex.val_delta, seen);
  p.check(ex.val_delta >= 0.0, "val_delta", "must be >= 0");

  p.field(doc, "design_n_seqs", ex.design.n_seqs, seen);
  p.check(ex.design.n_seqs >= 1, "design_n_seqs", "must be >= 1");
  p.field(doc, "design_temperature", ex.design.temperature, seen);
  p.check(ex.design.temperature > 0.0, "design_temperature", "must be > 0");
  p.field(doc, "design_threshold", ex.design.threshold, seen);

  p.field(doc, "seeds", cfg.seeds, seen);
  p.check(!cfg.seeds.empty(), "seeds", "must list at least one seed");
  p.field(doc, "sizes", cfg.sizes, seen);
  for (int s : cfg.sizes) p.check(s >= 1, "sizes", "entries must be >= 1");

  if (doc.contains("grid")) {
    seen.insert("grid");
    const auto& g = doc.at("grid");
    if (!g.is_array() || g.empty()) {
      p.fail("grid", "must be a non-empty array of cells");
    } else {
      cfg.grid.clear();
      for (size_t i = 0; i < g.size(); ++i) {
        const std::string prefix = "grid[" + std::to_string(i) + "].";
        if (!g[i].is_object()) {
          p.fail(prefix, "must be an object");
          continue;
        }
        cfg.grid.push_back(parse_cell(g[i], ex.finetune.hyper, p, prefix));
      }
    }
  } else {
    for (auto& cell : cfg.grid) cell.hyper = ex.finetune.hyper;
  }

  reject_unknown(doc, seen, p, "");
  if (!p.errors().empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : p.errors()) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
  const auto& ex = cfg.experiment;
  json j = io::to_json(ex.finetune);
  json pre = io::to_json(ex.pretrain);
  pre.erase("loss");
  j["pretrain"] = pre;
  j["window_radius"] = ex.oracle.window_radius;
  j["n_structures"] = ex.dataset.n_structures;
  j["length_range"] = {ex.dataset.lengths.min, ex.dataset.lengths.max};
  j["val_fraction"] = ex.dataset.val_fraction;
  j["native_bias_scale"] = ex.dataset.native_bias_scale;
  j["n_samples"] = ex.n_samples;
  j["sample_temperature"] = ex.sample_temperature;
  j["strategy"] = to_string(cfg.strategy);
  j["delta"] = ex.pair_params.delta;
  j["application_hi"] = ex.pair_params.application_hi;
  j["application_lo"] = ex.pair_params.application_lo;
  j["rejection_k"] = ex.pair_params.rejection_k;
  j["relative_cap"] = ex.pair_params.relative_cap;
  j["val_delta"] = ex.val_delta;
  j["design_n_seqs"] = ex.design.n_seqs;
  j["design_temperature"] = ex.design.temperature;
  j["design_threshold"] = ex.design.threshold;
  j["seeds"] = cfg.seeds;
  j["sizes"] = cfg.sizes;
  json grid = json::array();
  for (const auto& c : cfg.grid) {
    json cell = io::to_json(c.hyper);
    cell["name"] = c.name;
    cell["strategy"] = to_string(c.strategy);
    cell["loss"] = to_string(c.loss);
    cell["reference_only"] = c.reference_only;
    if (c.n_train_structures) cell["n_train_structures"] = *c.n_train_structures;
    grid.push_back(cell);
  }
  j["grid"] = grid;
  return j;
}

}  // namespace residpo::cli
