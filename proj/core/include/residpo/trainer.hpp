#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "residpo/core.hpp"
#include "residpo/losses.hpp"
#include "residpo/pairs.hpp"
#include "residpo/policy.hpp"

namespace residpo {

struct TrainConfig {
  LossKind loss = LossKind::Residpo;
  LossHyperparams hyper;
  double learning_rate = 1e-4;
  int total_steps = 2000;
  double warmup_fraction = 0.03;
  int batch_size = 8;
  int grad_accum = 16;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t master_seed = 0;

  /// Desk-scale preference fine-tuning defaults (lr 1e-4, 2,000 steps).
  static TrainConfig finetune_defaults(LossKind loss = LossKind::Residpo);
  /// Reference pretraining defaults (lr 1e-3, 1,000 steps).
  static TrainConfig pretrain_defaults();
  /// The published large-model recipe (lr 5e-7, 100,000 steps).
  static TrainConfig paper_scale(LossKind loss = LossKind::Residpo);

  /// Throws ConfigError listing every offending field.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Linear warmup over round(warmup_fraction * total) steps, then cosine decay.
double lr_at(int step, const TrainConfig& cfg);

struct AdamState {
  std::vector<double> m = std::vector<double>(PolicyParams::kCount, 0.0);
  std::vector<double> v = std::vector<double>(PolicyParams::kCount, 0.0);
  std::int64_t t = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamResult {
  PolicyParams params;
  AdamState moments;
};

/// Bias-corrected Adam update. Throws NumericError on a non-finite gradient.
AdamResult adam_step(PolicyParams params, const Gradient& grads, AdamState moments, double lr,
                     const AdamOptions& opts);

struct MetricRecord {
  int step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double rpl = 0.0;
  double rcl = 0.0;
  double fallback_fraction = 0.0;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

struct Checkpoint {
  PolicyParams params;
  int step = 0;
  TrainConfig config;
  AdamState optimizer;
  std::vector<MetricRecord> metric_tail;

  static constexpr size_t kTailLength = 50;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricRecord> log;
};

/// Native-sequence corpus for reference pretraining.
struct NativeCorpus {
  std::vector<StructureInstance> structures;
  std::vector<Sequence> natives;  // parallel to structures
};

/// Preference data: structures, their scored pools, and pairs indexing into the pools.
class PairDataset {
 public:
  PairDataset() = default;
  /// Throws DataError if a pair names an unknown structure or an out-of-range index.
  PairDataset(std::vector<StructureInstance> structures, std::vector<std::vector<ScoredSequence>> pools,
              std::vector<PreferencePair> pairs);

  const std::vector<StructureInstance>& structures() const { return structures_; }
  const std::vector<std::vector<ScoredSequence>>& pools() const { return pools_; }
  const std::vector<PreferencePair>& pairs() const { return pairs_; }
  size_t size() const { return pairs_.size(); }

  int structure_of(size_t pair) const { return pair_structure_[pair]; }
  const ScoredSequence& winner(size_t pair) const;
  const ScoredSequence& loser(size_t pair) const;

 private:
  std::vector<StructureInstance> structures_;
  std::vector<std::vector<ScoredSequence>> pools_;
  std::vector<PreferencePair> pairs_;
  std::vector<int> pair_structure_;
};

/// Cross-entropy on native sequences from a fresh initialization (or from resume).
/// stop_at >= 0 ends the run after that many steps without changing the schedule.
TrainResult pretrain(const TrainConfig& cfg, const NativeCorpus& corpus,
                     const std::optional<Checkpoint>& resume = std::nullopt, int stop_at = -1);

/// Mean per-residue native NLL of a model over a corpus.
double native_nll(const PolicyParams& params, const NativeCorpus& corpus);

/// Preference fine-tuning of a copy of the reference. When resume is given,
/// training continues from its step and optimizer state.
TrainResult finetune(const TrainConfig& cfg, const PairDataset& data, const Checkpoint& ref,
                     const std::optional<Checkpoint>& resume = std::nullopt, int stop_at = -1);

/// Reference log-probabilities per structure, computed on first use.
/// The reference is frozen, so caching does not change any result.
class ReferenceCache {
 public:
  ReferenceCache(const PolicyParams& ref, const PairDataset& data)
      : ref_(ref), data_(data), cache_(data.structures().size()) {}

  const PerResidueLogProbs& at(size_t structure);
  const PolicyParams& params() const { return ref_; }

 private:
  const PolicyParams& ref_;
  const PairDataset& data_;
  std::vector<std::optional<PerResidueLogProbs>> cache_;
};

/// Mean pair loss and its gradient over the listed pairs, in the given order.
struct BatchLoss {
  double loss = 0.0;
  double rpl = 0.0;
  double rcl = 0.0;
  double fallback_fraction = 0.0;
  Gradient grad;
};
BatchLoss pair_batch_loss(LossKind kind, const LossHyperparams& h, const PolicyParams& theta,
                          ReferenceCache& ref, const PairDataset& data, std::span<const size_t> pairs);

}  // namespace residpo
