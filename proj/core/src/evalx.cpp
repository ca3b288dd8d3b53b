#include "residpo/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace residpo {

double plddt_accuracy(const PairDataset& pairs, const SequenceScorer& scorer) {
  if (pairs.size() == 0) throw DataError("plddt_accuracy: empty pair set");
  double wins = 0.0;
  for (size_t p = 0; p < pairs.size(); ++p) {
    const auto s = static_cast<size_t>(pairs.structure_of(p));
    const double w = scorer(s, pairs.winner(p));
    const double l = scorer(s, pairs.loser(p));
    wins += w > l ? 1.0 : (w == l ? 0.5 : 0.0);
  }
  return 100.0 * wins / static_cast<double>(pairs.size());
}

double plddt_accuracy(const PolicyParams& model, const PairDataset& pairs) {
  std::vector<std::optional<PerResidueLogProbs>> cache(pairs.structures().size());
  return plddt_accuracy(pairs, [&](size_t s, const ScoredSequence& y) {
    if (!cache[s]) cache[s] = forward(model, pairs.structures()[s]);
    return seq_log_prob(*cache[s], y.residues).total / static_cast<double>(y.residues.size());
  });
}

double seq_recovery(const std::vector<Sequence>& predicted, const std::vector<Sequence>& natives) {
  if (predicted.size() != natives.size()) throw DataError("seq_recovery: prediction/native count mismatch");
  size_t hits = 0;
  size_t total = 0;
  for (size_t s = 0; s < natives.size(); ++s) {
    if (predicted[s].size() != natives[s].size()) throw DataError("seq_recovery: length mismatch");
    for (size_t i = 0; i < natives[s].size(); ++i) hits += predicted[s][i] == natives[s][i] ? 1 : 0;
    total += natives[s].size();
  }
  return total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

double seq_recovery(const PolicyParams& model, const std::vector<StructureInstance>& structures,
                    const std::vector<Sequence>& natives) {
  std::vector<Sequence> predicted;
  predicted.reserve(structures.size());
  for (const auto& s : structures) predicted.push_back(argmax_sequence(forward(model, s)));
  return seq_recovery(predicted, natives);
}

DesignReport design_success(const std::vector<std::vector<ScoredSequence>>& designs, double threshold) {
  for (const auto& per_structure : designs) {
    if (per_structure.empty() || per_structure.size() != designs.front().size()) {
      throw DataError("design_success: every structure needs the same non-zero number of designs");
    }
  }
  DesignReport r;
  size_t n_seq = 0;
  size_t ok_seq = 0;
  size_t ok_backbone = 0;
  double plddt_sum = 0.0;
  for (const auto& per_structure : designs) {
    bool any = false;
    for (const auto& d : per_structure) {
      ++n_seq;
      plddt_sum += d.mean_plddt;
      if (d.mean_plddt > threshold) {
        ++ok_seq;
        any = true;
      }
    }
    ok_backbone += any ? 1 : 0;
  }
  if (n_seq) {
    r.sequence_success = 100.0 * static_cast<double>(ok_seq) / static_cast<double>(n_seq);
    r.mean_plddt = plddt_sum / static_cast<double>(n_seq);
  }
  if (!designs.empty()) {
    r.backbone_success = 100.0 * static_cast<double>(ok_backbone) / static_cast<double>(designs.size());
  }
  return r;
}

DesignReport design_success(const PolicyParams& model, const HiddenTargetMap& map,
                            const std::vector<StructureInstance>& structures, const DesignOptions& opts) {
  return design_success(
      sample_and_score(model, map, structures, opts.n_seqs, opts.temperature, opts.oracle, opts.seed),
      opts.threshold);
}

CompositionReport composition_from_designs(const std::vector<Sequence>& ref_designs,
                                           const std::vector<Sequence>& tuned_designs) {
  if (ref_designs.size() != tuned_designs.size()) throw DataError("composition: design count mismatch");
  CompositionReport r;
  std::array<std::array<double, kNumAminoAcids>, kNumAminoAcids> counts{};
  double n = 0.0;
  for (size_t s = 0; s < ref_designs.size(); ++s) {
    if (ref_designs[s].size() != tuned_designs[s].size()) throw DataError("composition: length mismatch");
    for (size_t i = 0; i < ref_designs[s].size(); ++i) {
      const auto a = static_cast<size_t>(ref_designs[s][i].index());
      const auto b = static_cast<size_t>(tuned_designs[s][i].index());
      r.ref_frequency[a] += 1.0;
      r.tuned_frequency[b] += 1.0;
      counts[a][b] += 1.0;
      n += 1.0;
    }
  }
  if (n > 0.0) {
    for (auto& f : r.ref_frequency) f /= n;
    for (auto& f : r.tuned_frequency) f /= n;
  }
  for (size_t a = 0; a < kNumAminoAcids; ++a) {
    double row = 0.0;
    for (double c : counts[a]) row += c;
    r.row_supported[a] = row > 0.0;
    for (size_t b = 0; b < kNumAminoAcids; ++b) r.substitution[a][b] = row > 0.0 ? counts[a][b] / row : 0.0;
  }
  return r;
}

CompositionReport composition_shift(const PolicyParams& ref, const PolicyParams& tuned,
                                    const std::vector<StructureInstance>& structures, double temperature,
                                    std::uint64_t seed) {
  std::vector<Sequence> ref_designs;
  std::vector<Sequence> tuned_designs;
  SamplingOptions opts;
  opts.temperature = temperature;
  for (size_t s = 0; s < structures.size(); ++s) {
    const auto k = derive_seed(seed, "composition", {static_cast<std::uint64_t>(s)});
    ref_designs.push_back(sample(ref, structures[s], opts, k));
    tuned_designs.push_back(sample(tuned, structures[s], opts, k));
  }
  return composition_from_designs(ref_designs, tuned_designs);
}

std::vector<std::vector<ScoredSequence>> sample_and_score(const PolicyParams& model, const HiddenTargetMap& map,
                                                          const std::vector<StructureInstance>& structures,
                                                          int n, double temperature, const OracleConfig& oracle,
                                                          std::uint64_t seed) {
  SamplingOptions opts;
  opts.temperature = temperature;
  std::vector<std::vector<ScoredSequence>> pools;
  pools.reserve(structures.size());
  for (size_t s = 0; s < structures.size(); ++s) {
    const auto logp = forward(model, structures[s]);
    std::vector<ScoredSequence> pool;
    pool.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
      auto y = sample(logp, opts,
                      derive_seed(seed, "sample", {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(k)}));
      pool.push_back(score_sequence(map, structures[s], std::move(y), oracle));
    }
    pools.push_back(std::move(pool));
  }
  return pools;
}

std::vector<PreferencePair> build_pairs(const std::vector<std::vector<ScoredSequence>>& pools,
                                        SamplingStrategy strategy, const PairParams& params, std::uint64_t seed) {
  std::vector<PreferencePair> out;
  for (const auto& pool : pools) {
    if (pool.size() < 2) continue;
    const auto& id = pool.front().structure_id;
    auto p = make_pairs(pool, strategy, params, derive_seed(seed, "pairs", {fnv1a64(id)}));
    out.insert(out.end(), p.begin(), p.end());
  }
  std::stable_sort(out.begin(), out.end(), [](const PreferencePair& a, const PreferencePair& b) {
    return std::tie(a.structure_id, a.winner_index, a.loser_index) <
           std::tie(b.structure_id, b.winner_index, b.loser_index);
  });
  return out;
}

namespace {

NativeCorpus corpus_for(const SyntheticDataset& ds, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < ds.structures.size(); ++i) index.emplace(ds.structures[i].id, i);
  NativeCorpus c;
  for (const auto& id : ids) {
    const size_t i = index.at(id);
    c.structures.push_back(ds.structures[i]);
    c.natives.push_back(ds.natives[i]);
  }
  return c;
}

}  // namespace

Experiment prepare_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
  Experiment exp;
  exp.config = cfg;
  exp.seed = seed;
  exp.data = make_dataset(cfg.dataset, seed);
  exp.train_corpus = corpus_for(exp.data, exp.data.split.train_ids);
  exp.val_corpus = corpus_for(exp.data, exp.data.split.val_ids);

  auto pre = cfg.pretrain;
  pre.master_seed = seed;
  exp.reference = pretrain(pre, exp.train_corpus).checkpoint;

  exp.train_pools = sample_and_score(exp.reference.params, exp.data.map, exp.train_corpus.structures,
                                     cfg.n_samples, cfg.sample_temperature, cfg.oracle,
                                     derive_seed(seed, "train_pool"));
  auto val_pools = sample_and_score(exp.reference.params, exp.data.map, exp.val_corpus.structures, cfg.n_samples,
                                    cfg.sample_temperature, cfg.oracle, derive_seed(seed, "val_pool"));
  PairParams val_params = cfg.pair_params;
  val_params.delta = cfg.val_delta;
  val_params.relative_cap = 0;
  auto val_pairs = build_pairs(val_pools, SamplingStrategy::Relative, val_params, derive_seed(seed, "val_pairs"));
  exp.val_pairs = PairDataset(exp.val_corpus.structures, std::move(val_pools), std::move(val_pairs));
  return exp;
}

EvalReport evaluate(const Experiment& exp, const PolicyParams& model, int n_train_pairs) {
  EvalReport r;
  r.plddt_accuracy = plddt_accuracy(model, exp.val_pairs);
  r.seq_recovery = seq_recovery(model, exp.val_corpus.structures, exp.val_corpus.natives);
  auto opts = exp.config.design;
  opts.oracle = exp.config.oracle;
  opts.seed = derive_seed(exp.seed, "design");
  const auto design = design_success(model, exp.data.map, exp.val_corpus.structures, opts);
  r.mean_design_plddt = design.mean_plddt;
  r.success_rate = design.sequence_success;
  r.backbone_success_rate = design.backbone_success;
  r.n_pairs = n_train_pairs;
  r.n_structures = static_cast<int>(exp.val_corpus.structures.size());
  return r;
}

std::vector<size_t> subset_indices(const Experiment& exp, int size) {
  const size_t n = exp.train_corpus.structures.size();
  if (size < 1 || static_cast<size_t>(size) > n) {
    throw DataError("subset size " + std::to_string(size) + " exceeds the " + std::to_string(n) +
                    " training structures");
  }
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(exp.seed, "subset", {static_cast<std::uint64_t>(size)}));
  rng.shuffle(idx);
  idx.resize(static_cast<size_t>(size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

PairDataset training_pairs(const Experiment& exp, const CellSpec& cell) {
  std::vector<StructureInstance> structures;
  std::vector<std::vector<ScoredSequence>> pools;
  if (cell.n_train_structures) {
    for (size_t i : subset_indices(exp, *cell.n_train_structures)) {
      structures.push_back(exp.train_corpus.structures[i]);
      pools.push_back(exp.train_pools[i]);
    }
  } else {
    structures = exp.train_corpus.structures;
    pools = exp.train_pools;
  }
  auto pairs = build_pairs(pools, cell.strategy, exp.config.pair_params, derive_seed(exp.seed, "train_pairs"));
  return PairDataset(std::move(structures), std::move(pools), std::move(pairs));
}

CellResult run_cell(const Experiment& exp, const CellSpec& cell) {
  CellResult out;
  out.cell = cell;
  out.seed = exp.seed;
  try {
    if (cell.reference_only) {
      out.report = evaluate(exp, exp.reference.params, 0);
      out.checkpoint = exp.reference;
      return out;
    }
    const auto data = training_pairs(exp, cell);
    auto cfg = exp.config.finetune;
    cfg.loss = cell.loss;
    cfg.hyper = cell.hyper;
    cfg.master_seed = exp.seed;
    auto trained = finetune(cfg, data, exp.reference);
    out.report = evaluate(exp, trained.checkpoint.params, static_cast<int>(data.size()));
    out.checkpoint = std::move(trained.checkpoint);
    out.log = std::move(trained.log);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

std::vector<CellSpec> table1_grid() {
  std::vector<CellSpec> g;
  g.push_back({"reference", SamplingStrategy::Relative, LossKind::Dpo, {}, std::nullopt, true});
  g.push_back({"rejection/dpo", SamplingStrategy::Rejection, LossKind::Dpo, {}, std::nullopt, false});
  g.push_back({"application/dpo", SamplingStrategy::Application, LossKind::Dpo, {}, std::nullopt, false});
  g.push_back({"relative/dpo", SamplingStrategy::Relative, LossKind::Dpo, {}, std::nullopt, false});
  g.push_back({"relative/rpl", SamplingStrategy::Relative, LossKind::Rpl, {}, std::nullopt, false});
  g.push_back({"relative/residpo", SamplingStrategy::Relative, LossKind::Residpo, {}, std::nullopt, false});
  return g;
}

std::vector<CellResult> ablate(const Experiment& exp, const std::vector<CellSpec>& grid) {
  std::vector<CellResult> out;
  out.reserve(grid.size());
  for (const auto& cell : grid) out.push_back(run_cell(exp, cell));
  return out;
}

std::vector<EfficiencyPoint> data_efficiency(const Experiment& exp, const std::vector<int>& sizes) {
  for (int size : sizes) (void)subset_indices(exp, size);
  std::vector<EfficiencyPoint> out;
  for (int size : sizes) {
    const auto idx = subset_indices(exp, size);
    std::vector<std::string> ids;
    for (size_t i : idx) ids.push_back(exp.train_corpus.structures[i].id);
    for (auto loss : {LossKind::Dpo, LossKind::Residpo}) {
      CellSpec cell{std::string(to_string(loss)) + "@" + std::to_string(size), SamplingStrategy::Relative, loss,
                    exp.config.finetune.hyper, size, false};
      auto r = run_cell(exp, cell);
      if (!r.report) throw DataError("data_efficiency: cell " + cell.name + " failed: " + r.error);
      out.push_back({size, loss, r.report->plddt_accuracy, ids, *r.report});
    }
  }
  return out;
}

}  // namespace residpo
