#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "residpo/oracle.hpp"
#include "residpo/pairs.hpp"
#include "residpo/policy.hpp"
#include "residpo/synth.hpp"
#include "residpo/trainer.hpp"

namespace residpo {

struct DesignReport {
  double sequence_success = 0.0;  // percent of sequences with mean pLDDT > threshold
  double backbone_success = 0.0;  // percent of structures with at least one success
  double mean_plddt = 0.0;
};

struct EvalReport {
  double plddt_accuracy = 0.0;
  double seq_recovery = 0.0;
  double mean_design_plddt = 0.0;
  double success_rate = 0.0;
  double backbone_success_rate = 0.0;
  int n_pairs = 0;
  int n_structures = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores one sequence of one structure (by structure index in the dataset).
using SequenceScorer = std::function<double(size_t structure, const ScoredSequence&)>;

/// Percent of pairs where the scorer ranks the winner strictly above the
/// loser; ties count one half. Throws DataError on an empty pair set.
double plddt_accuracy(const PairDataset& pairs, const SequenceScorer& scorer);
/// Ranks by length-normalized log-likelihood under the model.
double plddt_accuracy(const PolicyParams& model, const PairDataset& pairs);

/// Percent of positions where the per-position argmax equals the native residue.
double seq_recovery(const PolicyParams& model, const std::vector<StructureInstance>& structures,
                    const std::vector<Sequence>& natives);
double seq_recovery(const std::vector<Sequence>& predicted, const std::vector<Sequence>& natives);

struct DesignOptions {
  int n_seqs = 8;
  double temperature = 0.1;
  double threshold = 80.0;
  OracleConfig oracle;
  std::uint64_t seed = 0;
};

/// Success rates for already-scored designs grouped per structure. Every
/// structure must carry the same number of designs.
DesignReport design_success(const std::vector<std::vector<ScoredSequence>>& designs, double threshold);
DesignReport design_success(const PolicyParams& model, const HiddenTargetMap& map,
                            const std::vector<StructureInstance>& structures, const DesignOptions& opts);

struct CompositionReport {
  std::array<double, kNumAminoAcids> ref_frequency{};
  std::array<double, kNumAminoAcids> tuned_frequency{};
  /// Row r: distribution of tuned residues at positions where the reference design has r.
  std::array<std::array<double, kNumAminoAcids>, kNumAminoAcids> substitution{};
  std::array<bool, kNumAminoAcids> row_supported{};
};

CompositionReport composition_from_designs(const std::vector<Sequence>& ref_designs,
                                           const std::vector<Sequence>& tuned_designs);
/// One design per structure per model; both models share the per-structure seed.
CompositionReport composition_shift(const PolicyParams& ref, const PolicyParams& tuned,
                                    const std::vector<StructureInstance>& structures, double temperature,
                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment harness

/// n sampled-and-scored sequences per structure; sequence k of structure s
/// uses derive_seed(seed, "sample", {s, k}).
std::vector<std::vector<ScoredSequence>> sample_and_score(const PolicyParams& model, const HiddenTargetMap& map,
                                                          const std::vector<StructureInstance>& structures,
                                                          int n, double temperature, const OracleConfig& oracle,
                                                          std::uint64_t seed);

/// Pairs for every pool, ordered by (structure id, winner, loser).
std::vector<PreferencePair> build_pairs(const std::vector<std::vector<ScoredSequence>>& pools,
                                        SamplingStrategy strategy, const PairParams& params, std::uint64_t seed);

struct ExperimentConfig {
  DatasetSpec dataset;
  TrainConfig pretrain = TrainConfig::pretrain_defaults();
  TrainConfig finetune = TrainConfig::finetune_defaults();
  OracleConfig oracle;
  int n_samples = 8;
  double sample_temperature = 1.0;
  PairParams pair_params;
  /// Validation pairs always use relative sampling without a cap.
  double val_delta = 10.0;
  DesignOptions design;
};

/// Everything shared between the cells of one seed.
struct Experiment {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  SyntheticDataset data;
  NativeCorpus train_corpus;
  NativeCorpus val_corpus;
  Checkpoint reference;
  std::vector<std::vector<ScoredSequence>> train_pools;
  PairDataset val_pairs;
};

/// Generates data, pretrains the reference, samples the training pools and the validation pairs.
Experiment prepare_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

struct CellSpec {
  std::string name;
  SamplingStrategy strategy = SamplingStrategy::Relative;
  LossKind loss = LossKind::Residpo;
  LossHyperparams hyper;
  /// Restrict training to a seeded subset of this many training structures.
  std::optional<int> n_train_structures;
  /// No training: evaluate the reference model itself.
  bool reference_only = false;
};

struct CellResult {
  CellSpec cell;
  std::uint64_t seed = 0;
  std::optional<EvalReport> report;
  std::optional<Checkpoint> checkpoint;
  std::vector<MetricRecord> log;
  std::string error;
};

EvalReport evaluate(const Experiment& exp, const PolicyParams& model, int n_train_pairs);
PairDataset training_pairs(const Experiment& exp, const CellSpec& cell);
CellResult run_cell(const Experiment& exp, const CellSpec& cell);

/// The six rows of the sampling/loss comparison table.
std::vector<CellSpec> table1_grid();

/// Trains and evaluates every cell; a failing cell records its error and the others still run.
std::vector<CellResult> ablate(const Experiment& exp, const std::vector<CellSpec>& grid);

struct EfficiencyPoint {
  int n_structures = 0;
  LossKind loss = LossKind::Dpo;
  double plddt_accuracy = 0.0;
  std::vector<std::string> subset;
  EvalReport report;
};

/// For each size, trains dpo and residpo on the same seeded structure subset.
std::vector<EfficiencyPoint> data_efficiency(const Experiment& exp, const std::vector<int>& sizes);

/// Seeded subset of training structure indices (into exp.train_corpus), sorted.
std::vector<size_t> subset_indices(const Experiment& exp, int size);

}  // namespace residpo
