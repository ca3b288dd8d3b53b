#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "formats.hpp"
#include "residpo/gradcheck.hpp"

namespace residpo::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out = ".";
};

/// Records inputs and outputs of one command and writes <verb>.manifest.json.
class Manifest {
 public:
  Manifest(std::string verb, const Common& common) : verb_(std::move(verb)), common_(common) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }
  void config(json c) { config_ = std::move(c); }

  void write() const {
    auto files = [](const std::vector<fs::path>& paths) {
      json arr = json::array();
      for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"digest", io::digest(p)}});
      return arr;
    };
    const SeedManifest seeds{common_.seed};
    json m = {{"file_role", "run_manifest"},
              {"tool_version", kToolVersion},
              {"command", verb_},
              {"config", config_},
              {"seed_manifest",
               {{"master_seed", seeds.master_seed},
                {"generator_name", seeds.generator_name},
                {"derived_seed_rule", seeds.derived_seed_rule}}},
              {"inputs", files(inputs_)},
              {"outputs", files(outputs_)},
              {"timestamp_unix", timestamp()}};
    io::write_json(fs::path(common_.out) / (verb_ + ".manifest.json"), m);
  }

 private:
  /// SOURCE_DATE_EPOCH pins the timestamp for reproducible manifests.
  static std::int64_t timestamp() {
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) return std::strtoll(env, nullptr, 10);
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  std::string verb_;
  Common common_;
  json config_ = json::object();
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

RunConfig config_for(const Common& c, Manifest* manifest) {
  RunConfig cfg = c.config.empty() ? parse_config(json::object()) : load_config(c.config);
  if (!c.config.empty() && manifest) manifest->input(c.config);
  if (c.seed_given) cfg.seeds = {c.seed};
  if (manifest) manifest->config(to_json(cfg));
  return cfg;
}

struct LoadedSplit {
  std::vector<StructureInstance> structures;
  std::vector<size_t> indices;  // into the full structure list
};

LoadedSplit select(const std::vector<StructureInstance>& all, const fs::path& split_path, const std::string& subset) {
  LoadedSplit out;
  if (subset == "all") {
    out.structures = all;
    for (size_t i = 0; i < all.size(); ++i) out.indices.push_back(i);
    return out;
  }
  const auto split = io::split_from_json(io::read_json(split_path));
  const auto& ids = subset == "train" ? split.train_ids : split.val_ids;
  std::set<std::string> wanted(ids.begin(), ids.end());
  for (size_t i = 0; i < all.size(); ++i) {
    if (wanted.count(all[i].id)) {
      out.structures.push_back(all[i]);
      out.indices.push_back(i);
    }
  }
  if (out.structures.size() != wanted.size()) throw DataError("split names structures missing from the dataset");
  return out;
}

std::vector<json> metric_lines(const std::vector<MetricRecord>& log) {
  std::vector<json> lines;
  for (const auto& r : log) lines.push_back(io::to_json(r));
  return lines;
}

std::string metrics_csv(const std::vector<MetricRecord>& log) {
  std::ostringstream os;
  os << std::setprecision(17) << "step,metric,value\n";
  for (const auto& r : log) {
    os << r.step << ",lr," << r.lr << "\n"
       << r.step << ",loss," << r.loss << "\n"
       << r.step << ",rpl," << r.rpl << "\n"
       << r.step << ",rcl," << r.rcl << "\n"
       << r.step << ",fallback_fraction," << r.fallback_fraction << "\n";
  }
  return os.str();
}

void write_training_outputs(const fs::path& out, const TrainResult& r, Manifest& m) {
  io::write_json(out / "checkpoint.json", io::to_json(r.checkpoint));
  io::write_jsonl(out / "metrics.jsonl", metric_lines(r.log));
  io::write_file(out / "metrics.csv", metrics_csv(r.log));
  for (const char* f : {"checkpoint.json", "metrics.jsonl", "metrics.csv"}) m.output(out / f);
}

// --- verbs -----------------------------------------------------------------

int cmd_gen(const Common& c, std::ostream& out) {
  Manifest m("gen", c);
  const auto cfg = config_for(c, &m);
  const auto seed = cfg.seeds.front();
  const auto ds = make_dataset(cfg.experiment.dataset, seed);
  const auto files = io::DatasetFiles::in(c.out);
  std::vector<json> structures;
  std::vector<json> natives;
  for (size_t i = 0; i < ds.structures.size(); ++i) {
    structures.push_back(io::to_json(ds.structures[i]));
    natives.push_back(io::native_to_json(ds.structures[i].id, ds.natives[i]));
  }
  io::write_jsonl(files.structures, structures);
  io::write_jsonl(files.natives, natives);
  io::write_json(files.hidden_map, io::to_json(ds.map));
  io::write_json(files.split, io::to_json(ds.split));
  for (const auto& p : {files.structures, files.natives, files.hidden_map, files.split}) m.output(p);
  m.write();
  out << "wrote " << ds.structures.size() << " structures (" << ds.split.train_ids.size() << " train, "
      << ds.split.val_ids.size() << " val) to " << c.out << "\n";
  return kExitOk;
}

struct SampleArgs {
  std::string checkpoint;
  std::string data;
  std::string hidden_map;
  std::string subset = "all";
  int n = 8;
  double temperature = 1.0;
  std::string banned;
  std::vector<std::string> fixed;
};

int cmd_sample_score(const Common& c, const SampleArgs& a, std::ostream& out) {
  Manifest m("sample-score", c);
  m.config({{"n", a.n}, {"temperature", a.temperature}, {"subset", a.subset}, {"banned", a.banned}});
  const auto files = io::DatasetFiles::in(a.data);
  const fs::path map_path = a.hidden_map.empty() ? files.hidden_map : fs::path(a.hidden_map);
  if (!fs::exists(map_path)) throw DataError("missing hidden map '" + map_path.string() + "'");
  const auto map = io::hidden_map_from_json(io::read_json(map_path));
  const auto ckpt = io::checkpoint_from_json(io::read_json(a.checkpoint));
  const auto all = io::load_structures(files.structures);
  const auto chosen = select(all, files.split, a.subset);
  for (const auto& p : {fs::path(a.checkpoint), files.structures, map_path}) m.input(p);

  SamplingOptions opts;
  opts.temperature = a.temperature;
  for (char code : a.banned) opts.banned.push_back(AminoAcid::from_code(code));
  for (const auto& f : a.fixed) {
    const auto colon = f.find(':');
    if (colon == std::string::npos || colon + 2 != f.size()) {
      throw ConfigError("--fixed expects POSITION:RESIDUE, got '" + f + "'");
    }
    opts.fixed[std::stoi(f.substr(0, colon))] = AminoAcid::from_code(f[colon + 1]);
  }
  if (a.n < 1) throw ConfigError("--n must be >= 1");

  OracleConfig oracle;
  std::vector<json> lines;
  for (size_t s = 0; s < chosen.structures.size(); ++s) {
    const auto& st = chosen.structures[s];
    const auto logp = forward(ckpt.params, st);
    for (int k = 0; k < a.n; ++k) {
      const auto seed = derive_seed(c.seed, "sample",
                                    {static_cast<std::uint64_t>(chosen.indices[s]), static_cast<std::uint64_t>(k)});
      auto scored = score_sequence(map, st, sample(logp, opts, seed), oracle);
      lines.push_back(io::scored_to_json(scored, k));
    }
  }
  const auto path = fs::path(c.out) / "sequences.jsonl";
  io::write_jsonl(path, lines);
  m.output(path);
  m.write();
  out << "wrote " << lines.size() << " scored sequences to " << path.string() << "\n";
  return kExitOk;
}

struct PairArgs {
  std::string sequences;
  std::optional<std::string> strategy;
  std::optional<double> delta;
  std::optional<double> hi;
  std::optional<double> lo;
  std::optional<int> k;
  std::optional<int> cap;
};

int cmd_make_pairs(const Common& c, const PairArgs& a, std::ostream& out) {
  Manifest m("make-pairs", c);
  const auto cfg = config_for(c, nullptr);
  if (!c.config.empty()) m.input(c.config);
  const auto strategy = a.strategy ? parse_strategy(*a.strategy) : cfg.strategy;
  auto params = cfg.experiment.pair_params;
  if (a.delta) params.delta = *a.delta;
  if (a.hi) params.application_hi = *a.hi;
  if (a.lo) params.application_lo = *a.lo;
  if (a.k) params.rejection_k = *a.k;
  if (a.cap) params.relative_cap = *a.cap;
  m.config({{"strategy", to_string(strategy)},
            {"delta", params.delta},
            {"application_hi", params.application_hi},
            {"application_lo", params.application_lo},
            {"rejection_k", params.rejection_k},
            {"relative_cap", params.relative_cap}});
  // Pools in order of first appearance.
  std::vector<std::vector<ScoredSequence>> pools;
  std::map<std::string, size_t> index;
  for (const auto& j : io::read_jsonl(a.sequences)) {
    int k = 0;
    auto s = io::scored_from_json(j, &k);
    auto [it, inserted] = index.emplace(s.structure_id, pools.size());
    if (inserted) pools.emplace_back();
    auto& pool = pools[it->second];
    if (k != static_cast<int>(pool.size())) throw DataError("sample indices for '" + s.structure_id + "' out of order");
    pool.push_back(std::move(s));
  }
  m.input(a.sequences);
  const auto pairs = build_pairs(pools, strategy, params, derive_seed(c.seed, "train_pairs"));
  std::vector<json> lines;
  for (const auto& p : pairs) lines.push_back(io::to_json(p));
  const auto path = fs::path(c.out) / "pairs.jsonl";
  io::write_jsonl(path, lines);
  m.output(path);
  m.write();
  out << "wrote " << lines.size() << " " << to_string(strategy) << " pairs to " << path.string() << "\n";
  return kExitOk;
}

NativeCorpus load_corpus(const fs::path& data, const std::string& subset, Manifest& m) {
  const auto files = io::DatasetFiles::in(data);
  for (const auto& p : {files.structures, files.natives}) {
    io::reject_oracle_private(p);
    m.input(p);
  }
  const auto all = io::load_structures(files.structures);
  auto chosen = select(all, files.split, subset);
  NativeCorpus corpus;
  corpus.natives = io::load_natives(files.natives, chosen.structures);
  corpus.structures = std::move(chosen.structures);
  return corpus;
}

Checkpoint load_checkpoint(const fs::path& path, Manifest& m) {
  io::reject_oracle_private(path);
  m.input(path);
  return io::checkpoint_from_json(io::read_json(path));
}

struct TrainArgs {
  std::string data;
  std::string sequences;
  std::string pairs;
  std::string ref;
  std::string resume;
  int stop_at = -1;
};

int cmd_pretrain(const Common& c, const TrainArgs& a, std::ostream& out) {
  Manifest m("pretrain", c);
  const auto cfg = config_for(c, &m);
  auto tc = cfg.experiment.pretrain;
  tc.master_seed = cfg.seeds.front();
  const auto corpus = load_corpus(a.data, "train", m);
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume, m);
  const auto result = pretrain(tc, corpus, resume, a.stop_at);
  write_training_outputs(c.out, result, m);
  m.write();
  out << "pretrained to step " << result.checkpoint.step << "; final NLL "
      << (result.log.empty() ? 0.0 : result.log.back().loss) << "\n";
  return kExitOk;
}

int cmd_train(const Common& c, const TrainArgs& a, std::ostream& out) {
  Manifest m("train", c);
  const auto cfg = config_for(c, &m);
  auto tc = cfg.experiment.finetune;
  tc.master_seed = cfg.seeds.front();
  const auto files = io::DatasetFiles::in(a.data);
  for (const auto& p : {files.structures, fs::path(a.sequences), fs::path(a.pairs)}) {
    io::reject_oracle_private(p);
    m.input(p);
  }
  const auto ref = load_checkpoint(a.ref, m);
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume, m);
  auto structures = io::load_structures(files.structures);
  auto pools = io::load_pools(a.sequences, structures);
  const PairDataset data(std::move(structures), std::move(pools), io::load_pairs(a.pairs));
  const auto result = finetune(tc, data, ref, resume, a.stop_at);
  write_training_outputs(c.out, result, m);
  m.write();
  if (!result.log.empty()) {
    out << std::setprecision(9) << "trained " << to_string(tc.loss) << " on " << data.size()
        << " pairs; step-0 loss " << result.log.front().loss << ", final loss " << result.log.back().loss << "\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string hidden_map;
  std::string sequences;
  std::string pairs;
};

int cmd_eval(const Common& c, const EvalArgs& a, std::ostream& out) {
  Manifest m("eval", c);
  const auto cfg = config_for(c, &m);
  const auto files = io::DatasetFiles::in(a.data);
  const fs::path map_path = a.hidden_map.empty() ? files.hidden_map : fs::path(a.hidden_map);
  if (!fs::exists(map_path)) throw DataError("missing hidden map '" + map_path.string() + "'");
  const auto map = io::hidden_map_from_json(io::read_json(map_path));
  const auto ckpt = load_checkpoint(a.checkpoint, m);
  const auto all = io::load_structures(files.structures);
  const auto val = select(all, files.split, "val");
  const auto natives = io::load_natives(files.natives, val.structures);
  auto pools = io::load_pools(a.sequences, val.structures);
  const PairDataset val_pairs(val.structures, std::move(pools), io::load_pairs(a.pairs));
  for (const auto& p : {map_path, files.structures, files.natives, fs::path(a.sequences), fs::path(a.pairs)}) {
    m.input(p);
  }

  EvalReport r;
  r.plddt_accuracy = plddt_accuracy(ckpt.params, val_pairs);
  r.seq_recovery = seq_recovery(ckpt.params, val.structures, natives);
  auto opts = cfg.experiment.design;
  opts.oracle = cfg.experiment.oracle;
  opts.seed = derive_seed(cfg.seeds.front(), "design");
  const auto design = design_success(ckpt.params, map, val.structures, opts);
  r.mean_design_plddt = design.mean_plddt;
  r.success_rate = design.sequence_success;
  r.backbone_success_rate = design.backbone_success;
  r.n_pairs = static_cast<int>(val_pairs.size());
  r.n_structures = static_cast<int>(val.structures.size());

  const auto path = fs::path(c.out) / "report.json";
  io::write_json(path, io::to_json(r));
  m.output(path);
  m.write();
  out << io::to_json(r).dump() << "\n";
  return kExitOk;
}

std::string report_csv_row(const CellResult& r) {
  std::ostringstream os;
  os << std::setprecision(10) << r.cell.name << "," << r.seed << "," << to_string(r.cell.strategy) << ","
     << (r.cell.reference_only ? std::string("reference") : std::string(to_string(r.cell.loss))) << ",";
  if (r.report) {
    const auto& e = *r.report;
    os << e.plddt_accuracy << "," << e.seq_recovery << "," << e.mean_design_plddt << "," << e.success_rate << ","
       << e.backbone_success_rate << "," << e.n_pairs << "," << e.n_structures << ",";
  } else {
    os << ",,,,,,,";
  }
  std::string err = r.error;
  for (auto& ch : err) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  os << err << "\n";
  return os.str();
}

int cmd_ablate(const Common& c, std::ostream& out, std::ostream& err) {
  Manifest m("ablate", c);
  const auto cfg = config_for(c, &m);
  std::vector<json> lines;
  std::string csv =
      "cell,seed,strategy,loss,plddt_accuracy,seq_recovery,mean_design_plddt,success_rate,"
      "backbone_success_rate,n_pairs,n_structures,error\n";
  for (auto seed : cfg.seeds) {
    const auto exp = prepare_experiment(cfg.experiment, seed);
    for (const auto& r : ablate(exp, cfg.grid)) {
      json line = {{"cell", r.cell.name},
                   {"seed", seed},
                   {"strategy", to_string(r.cell.strategy)},
                   {"loss", r.cell.reference_only ? std::string("reference") : std::string(to_string(r.cell.loss))},
                   {"hyperparams", io::to_json(r.cell.hyper)}};
      if (r.report) line["report"] = io::to_json(*r.report);
      if (!r.error.empty()) {
        line["error"] = r.error;
        err << "warning: cell " << r.cell.name << " (seed " << seed << ") failed: " << r.error << "\n";
      }
      lines.push_back(line);
      csv += report_csv_row(r);
      out << line.dump() << "\n";
    }
  }
  const fs::path dir(c.out);
  io::write_jsonl(dir / "ablation.jsonl", lines);
  io::write_file(dir / "ablation.csv", csv);
  m.output(dir / "ablation.jsonl");
  m.output(dir / "ablation.csv");
  m.write();
  return kExitOk;
}

int cmd_data_efficiency(const Common& c, std::ostream& out) {
  Manifest m("data-efficiency", c);
  const auto cfg = config_for(c, &m);
  std::vector<json> lines;
  std::string csv = "seed,n_structures,loss,plddt_accuracy\n";
  for (auto seed : cfg.seeds) {
    const auto exp = prepare_experiment(cfg.experiment, seed);
    for (const auto& p : data_efficiency(exp, cfg.sizes)) {
      json line = {{"seed", seed},
                   {"n_structures", p.n_structures},
                   {"loss", to_string(p.loss)},
                   {"plddt_accuracy", p.plddt_accuracy},
                   {"subset", p.subset}};
      lines.push_back(line);
      std::ostringstream row;
      row << std::setprecision(10) << seed << "," << p.n_structures << "," << to_string(p.loss) << ","
          << p.plddt_accuracy << "\n";
      csv += row.str();
      out << row.str();
    }
  }
  const fs::path dir(c.out);
  io::write_jsonl(dir / "efficiency.jsonl", lines);
  io::write_file(dir / "efficiency.csv", csv);
  m.output(dir / "efficiency.jsonl");
  m.output(dir / "efficiency.csv");
  m.write();
  return kExitOk;
}

struct CompositionArgs {
  std::string ref;
  std::string tuned;
  std::string data;
  std::string subset = "val";
  double temperature = 0.1;
};

int cmd_composition(const Common& c, const CompositionArgs& a, std::ostream& out) {
  Manifest m("composition", c);
  m.config({{"temperature", a.temperature}, {"subset", a.subset}});
  const auto ref = load_checkpoint(a.ref, m);
  const auto tuned = load_checkpoint(a.tuned, m);
  const auto files = io::DatasetFiles::in(a.data);
  m.input(files.structures);
  const auto chosen = select(io::load_structures(files.structures), files.split, a.subset);
  const auto report = composition_shift(ref.params, tuned.params, chosen.structures, a.temperature, c.seed);
  const auto path = fs::path(c.out) / "composition.json";
  io::write_json(path, io::to_json(report));
  m.output(path);
  m.write();
  out << "wrote composition report for " << chosen.structures.size() << " structures to " << path.string() << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Common& c, GradCheckOptions opts, std::ostream& out) {
  opts.seed = c.seed;
  bool ok = true;
  json results = json::array();
  for (const auto& r : run_gradcheck_suite(opts)) {
    out << std::setprecision(3) << r.loss << ": max relative error " << r.max_rel_error << " over " << r.probes
        << " probes (" << r.kink_skips << " kink redraws) " << (r.passed ? "ok" : "FAIL") << "\n";
    ok = ok && r.passed;
    results.push_back({{"loss", r.loss},
                       {"max_rel_error", r.max_rel_error},
                       {"probes", r.probes},
                       {"kink_skips", r.kink_skips},
                       {"passed", r.passed}});
  }
  if (c.out != ".") {
    Manifest m("gradcheck", c);
    const auto path = fs::path(c.out) / "gradcheck.json";
    io::write_json(path, results);
    m.output(path);
    m.write();
  }
  return ok ? kExitOk : kExitNumeric;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON configuration file");
  sub->add_option_function<std::uint64_t>(
      "--seed",
      [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_given = true;
      },
      "master seed (default 1)");
  sub->add_option("--out", c.out, "output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"residpo: residue-level designability preference optimization lab"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen", "generate structures, natives, hidden map and split");
  add_common(gen, common);

  SampleArgs sa;
  auto* ss = app.add_subcommand("sample-score", "sample sequences from a checkpoint and score them");
  add_common(ss, common);
  ss->add_option("--checkpoint", sa.checkpoint)->required();
  ss->add_option("--data", sa.data, "dataset directory written by gen")->required();
  ss->add_option("--hidden-map", sa.hidden_map, "defaults to <data>/hidden_map.json");
  ss->add_option("--subset", sa.subset)->check(CLI::IsMember({"all", "train", "val"}));
  ss->add_option("--n", sa.n, "sequences per structure");
  ss->add_option("--temperature", sa.temperature);
  ss->add_option("--banned", sa.banned, "one-letter codes removed from the vocabulary, e.g. C");
  ss->add_option("--fixed", sa.fixed, "POSITION:RESIDUE entries copied verbatim");

  PairArgs pa;
  auto* mp = app.add_subcommand("make-pairs", "build preference pairs from scored sequences");
  add_common(mp, common);
  mp->add_option("--sequences", pa.sequences)->required();
  mp->add_option("--strategy", pa.strategy, "rejection, application or relative (default from config: relative)");
  mp->add_option("--delta", pa.delta);
  mp->add_option("--hi", pa.hi);
  mp->add_option("--lo", pa.lo);
  mp->add_option("--k", pa.k);
  mp->add_option("--cap", pa.cap, "per-structure cap on relative pairs (0 = none)");

  TrainArgs ta;
  auto* pre = app.add_subcommand("pretrain", "train the reference model on native sequences");
  add_common(pre, common);
  pre->add_option("--data", ta.data)->required();
  pre->add_option("--resume", ta.resume);
  pre->add_option("--stop-at", ta.stop_at, "stop after this many steps, keeping the full schedule");

  auto* tr = app.add_subcommand("train", "preference fine-tuning from a reference checkpoint");
  add_common(tr, common);
  tr->add_option("--data", ta.data)->required();
  tr->add_option("--sequences", ta.sequences)->required();
  tr->add_option("--pairs", ta.pairs)->required();
  tr->add_option("--ref", ta.ref)->required();
  tr->add_option("--resume", ta.resume);
  tr->add_option("--stop-at", ta.stop_at, "stop after this many steps, keeping the full schedule");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the validation split");
  add_common(ev, common);
  ev->add_option("--checkpoint", ea.checkpoint)->required();
  ev->add_option("--data", ea.data)->required();
  ev->add_option("--hidden-map", ea.hidden_map);
  ev->add_option("--sequences", ea.sequences, "scored validation sequences")->required();
  ev->add_option("--pairs", ea.pairs, "validation pairs")->required();

  auto* ab = app.add_subcommand("ablate", "train and evaluate every grid cell");
  add_common(ab, common);
  auto* de = app.add_subcommand("data-efficiency", "dpo vs residpo over training-set sizes");
  add_common(de, common);

  CompositionArgs ca;
  auto* co = app.add_subcommand("composition", "amino-acid composition shift between two checkpoints");
  add_common(co, common);
  co->add_option("--ref", ca.ref)->required();
  co->add_option("--tuned", ca.tuned)->required();
  co->add_option("--data", ca.data)->required();
  co->add_option("--subset", ca.subset)->check(CLI::IsMember({"all", "train", "val"}));
  co->add_option("--temperature", ca.temperature);

  GradCheckOptions go;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every loss gradient");
  add_common(gc, common);
  gc->add_option("--cases", go.cases);
  gc->add_option("--probes", go.probes);

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(common, out);
    if (*ss) return cmd_sample_score(common, sa, out);
    if (*mp) return cmd_make_pairs(common, pa, out);
    if (*pre) return cmd_pretrain(common, ta, out);
    if (*tr) return cmd_train(common, ta, out);
    if (*ev) return cmd_eval(common, ea, out);
    if (*ab) return cmd_ablate(common, out, err);
    if (*de) return cmd_data_efficiency(common, out);
    if (*co) return cmd_composition(common, ca, out);
    if (*gc) return cmd_gradcheck(common, go, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Config: return kExitConfig;
      case ErrorKind::Data: return kExitData;
      case ErrorKind::Numeric: return kExitNumeric;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}

}  // namespace residpo::cli
