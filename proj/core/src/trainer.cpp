#include "residpo/trainer.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace residpo {

TrainConfig TrainConfig::finetune_defaults(LossKind loss) {
  TrainConfig c;
  c.loss = loss;
  return c;
}

TrainConfig TrainConfig::pretrain_defaults() {
  TrainConfig c;
  c.loss = LossKind::Pretrain;
  c.learning_rate = 1e-3;
  c.total_steps = 1000;
  return c;
}

TrainConfig TrainConfig::paper_scale(LossKind loss) {
  TrainConfig c;
  c.loss = loss;
  c.learning_rate = 5e-7;
  c.total_steps = 100000;
  return c;
}

void TrainConfig::validate() const {
  std::string bad;
  auto check = [&bad](bool ok, const char* msg) {
    if (!ok) bad += std::string(bad.empty() ? "" : "; ") + msg;
  };
  check(warmup_fraction > 0.0 && warmup_fraction < 1.0, "warmup_fraction must lie in (0, 1)");
  check(total_steps > 0, "total_steps must be > 0");
  check(batch_size > 0, "batch_size must be > 0");
  check(grad_accum > 0, "grad_accum must be > 0");
  check(learning_rate > 0.0, "learning_rate must be > 0");
  check(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_betas[0] must lie in [0, 1)");
  check(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_betas[1] must lie in [0, 1)");
  check(adam_epsilon > 0.0, "adam_epsilon must be > 0");
  try {
    hyper.validate();
  } catch (const ConfigError& e) {
    bad += std::string(bad.empty() ? "" : "; ") + e.what();
  }
  if (!bad.empty()) throw ConfigError(bad);
}

double lr_at(int step, const TrainConfig& cfg) {
  if (step < 0 || step >= cfg.total_steps) {
    throw ConfigError("lr_at: step " + std::to_string(step) + " outside [0, " +
                      std::to_string(cfg.total_steps) + ")");
  }
  const auto warmup = static_cast<int>(std::lround(cfg.warmup_fraction * cfg.total_steps));
  const double peak = cfg.learning_rate;
  if (step < warmup) return peak * static_cast<double>(step + 1) / warmup;
  const double phase = static_cast<double>(step - warmup) / static_cast<double>(cfg.total_steps - warmup);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

AdamResult adam_step(PolicyParams params, const Gradient& grads, AdamState moments, double lr,
                     const AdamOptions& opts) {
  require_finite(grads.flat(), "grad");
  moments.t += 1;
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(moments.t));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(moments.t));
  auto p = params.flat();
  const auto g = grads.flat();
  for (size_t i = 0; i < p.size(); ++i) {
    moments.m[i] = opts.beta1 * moments.m[i] + (1.0 - opts.beta1) * g[i];
    moments.v[i] = opts.beta2 * moments.v[i] + (1.0 - opts.beta2) * g[i] * g[i];
    const double m_hat = moments.m[i] / bc1;
    const double v_hat = moments.v[i] / bc2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + opts.epsilon);
  }
  return {std::move(params), std::move(moments)};
}

PairDataset::PairDataset(std::vector<StructureInstance> structures,
                         std::vector<std::vector<ScoredSequence>> pools, std::vector<PreferencePair> pairs)
    : structures_(std::move(structures)), pools_(std::move(pools)), pairs_(std::move(pairs)) {
  if (pools_.size() != structures_.size()) throw DataError("pair dataset: one pool per structure required");
  std::unordered_map<std::string, int> index;
  for (size_t i = 0; i < structures_.size(); ++i) index.emplace(structures_[i].id, static_cast<int>(i));
  pair_structure_.reserve(pairs_.size());
  for (const auto& p : pairs_) {
    auto it = index.find(p.structure_id);
    if (it == index.end()) throw DataError("pair references unknown structure '" + p.structure_id + "'");
    const auto& pool = pools_[static_cast<size_t>(it->second)];
    const auto n = static_cast<int>(pool.size());
    if (p.winner_index < 0 || p.winner_index >= n || p.loser_index < 0 || p.loser_index >= n ||
        p.winner_index == p.loser_index) {
      throw DataError("pair for structure '" + p.structure_id + "' has invalid indices");
    }
    pair_structure_.push_back(it->second);
  }
}

const ScoredSequence& PairDataset::winner(size_t pair) const {
  return pools_[static_cast<size_t>(pair_structure_[pair])][static_cast<size_t>(pairs_[pair].winner_index)];
}

const ScoredSequence& PairDataset::loser(size_t pair) const {
  return pools_[static_cast<size_t>(pair_structure_[pair])][static_cast<size_t>(pairs_[pair].loser_index)];
}

namespace {

AdamOptions adam_options(const TrainConfig& cfg) {
  return {cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
}

void push_tail(Checkpoint& ckpt, const MetricRecord& rec) {
  ckpt.metric_tail.push_back(rec);
  if (ckpt.metric_tail.size() > Checkpoint::kTailLength) ckpt.metric_tail.erase(ckpt.metric_tail.begin());
}

/// Index of the k-th example consumed by training: examples are visited in a
/// fresh seeded permutation each epoch, so the order is a pure function of k.
class EpochOrder {
 public:
  EpochOrder(size_t n, std::uint64_t master, std::string tag) : n_(n), master_(master), tag_(std::move(tag)) {}

  size_t at(std::uint64_t k) {
    const std::uint64_t epoch = k / n_;
    if (epoch != epoch_ || order_.empty()) {
      order_.resize(n_);
      for (size_t i = 0; i < n_; ++i) order_[i] = i;
      Rng rng(derive_seed(master_, tag_, {epoch}));
      rng.shuffle(order_);
      epoch_ = epoch;
    }
    return order_[k % n_];
  }

 private:
  size_t n_;
  std::uint64_t master_;
  std::string tag_;
  std::uint64_t epoch_ = 0;
  std::vector<size_t> order_;
};

Checkpoint start_from(const TrainConfig& cfg, const PolicyParams& init, const std::optional<Checkpoint>& resume) {
  if (resume) {
    Checkpoint c = *resume;
    c.config = cfg;
    return c;
  }
  Checkpoint c;
  c.params = init;
  c.config = cfg;
  return c;
}

int last_step(const TrainConfig& cfg, int stop_at) {
  return stop_at < 0 ? cfg.total_steps : std::min(stop_at, cfg.total_steps);
}

}  // namespace

double native_nll(const PolicyParams& params, const NativeCorpus& corpus) {
  double total = 0.0;
  size_t count = 0;
  for (size_t s = 0; s < corpus.structures.size(); ++s) {
    total -= seq_log_prob(params, corpus.structures[s], corpus.natives[s]).total;
    count += corpus.natives[s].size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

TrainResult pretrain(const TrainConfig& cfg, const NativeCorpus& corpus, const std::optional<Checkpoint>& resume,
                     int stop_at) {
  cfg.validate();
  if (cfg.loss != LossKind::Pretrain) throw ConfigError("pretrain: loss must be 'pretrain'");
  if (corpus.structures.empty()) throw DataError("pretrain: empty corpus");
  if (corpus.natives.size() != corpus.structures.size()) {
    throw DataError("pretrain: missing natives for some training structures");
  }
  for (size_t s = 0; s < corpus.structures.size(); ++s) {
    if (static_cast<int>(corpus.natives[s].size()) != corpus.structures[s].length()) {
      throw DataError("pretrain: native length mismatch for '" + corpus.structures[s].id + "'");
    }
  }

  TrainResult out;
  out.checkpoint = start_from(cfg, PolicyParams::init(derive_seed(cfg.master_seed, "policy_init")), resume);
  Checkpoint& ck = out.checkpoint;
  EpochOrder order(corpus.structures.size(), cfg.master_seed, "pretrain_epoch");
  const auto per_step = static_cast<std::uint64_t>(cfg.batch_size) * static_cast<std::uint64_t>(cfg.grad_accum);

  for (int step = ck.step; step < last_step(cfg, stop_at); ++step) {
    std::vector<size_t> batch(per_step);
    size_t residues = 0;
    for (std::uint64_t b = 0; b < per_step; ++b) {
      batch[b] = order.at(static_cast<std::uint64_t>(step) * per_step + b);
      residues += corpus.natives[batch[b]].size();
    }
    const double scale = 1.0 / static_cast<double>(residues);
    Gradient grad;
    double loss = 0.0;
    for (size_t s : batch) {
      const auto pass = forward_pass(ck.params, corpus.structures[s]);
      LogProbAdjoint adj(pass.length);
      const auto& native = corpus.natives[s];
      for (int i = 0; i < pass.length; ++i) {
        loss -= pass.logp.at(i, native[static_cast<size_t>(i)]);
        adj.at(i, native[static_cast<size_t>(i)]) = -1.0;
      }
      accumulate_gradient(ck.params, pass, adj, scale, grad);
    }
    loss *= scale;
    if (!std::isfinite(loss)) throw NumericError("pretrain: non-finite loss at step " + std::to_string(step));
    const double lr = lr_at(step, cfg);
    auto next = adam_step(std::move(ck.params), grad, std::move(ck.optimizer), lr, adam_options(cfg));
    ck.params = std::move(next.params);
    ck.optimizer = std::move(next.moments);
    ck.step = step + 1;
    MetricRecord rec{step, lr, loss, 0.0, 0.0, 0.0};
    out.log.push_back(rec);
    push_tail(ck, rec);
  }
  return out;
}

const PerResidueLogProbs& ReferenceCache::at(size_t structure) {
  auto& slot = cache_[structure];
  if (!slot) slot = forward(ref_, data_.structures()[structure]);
  return *slot;
}

BatchLoss pair_batch_loss(LossKind kind, const LossHyperparams& h, const PolicyParams& theta,
                          ReferenceCache& ref, const PairDataset& data, std::span<const size_t> pairs) {
  BatchLoss out;
  if (pairs.empty()) return out;
  const double scale = 1.0 / static_cast<double>(pairs.size());
  for (size_t p : pairs) {
    const auto sidx = static_cast<size_t>(data.structure_of(p));
    const auto& s = data.structures()[sidx];
    const auto& w = data.winner(p);
    const auto& l = data.loser(p);
    const auto pass = forward_pass(theta, s);
    const auto& ref_logp = ref.at(sidx);
    const auto tw = seq_log_prob(pass.logp, w.residues);
    const auto tl = seq_log_prob(pass.logp, l.residues);
    const auto rw = seq_log_prob(ref_logp, w.residues);
    const auto rl = seq_log_prob(ref_logp, l.residues);
    const PairBatchItem item{w.plddt, l.plddt, tw.per_residue, tl.per_residue, rw.per_residue, rl.per_residue};
    const auto pl = evaluate_pair_loss(kind, item, h);
    if (!std::isfinite(pl.total)) throw NumericError("non-finite pair loss");

    LogProbAdjoint adj(pass.length);
    for (int i = 0; i < pass.length; ++i) {
      adj.at(i, w.residues[static_cast<size_t>(i)]) += pl.d_theta_winner[static_cast<size_t>(i)];
      adj.at(i, l.residues[static_cast<size_t>(i)]) += pl.d_theta_loser[static_cast<size_t>(i)];
    }
    accumulate_gradient(theta, pass, adj, scale, out.grad);
    out.loss += scale * pl.total;
    out.rpl += scale * pl.rpl;
    out.rcl += scale * pl.rcl;
    out.fallback_fraction += scale * (pl.fallback ? 1.0 : 0.0);
  }
  return out;
}

TrainResult finetune(const TrainConfig& cfg, const PairDataset& data, const Checkpoint& ref,
                     const std::optional<Checkpoint>& resume, int stop_at) {
  cfg.validate();
  if (cfg.loss == LossKind::Pretrain) throw ConfigError("finetune: loss must be a preference loss");
  if (data.size() == 0) throw DataError("finetune: empty pair set");

  TrainResult out;
  out.checkpoint = start_from(cfg, ref.params, resume);
  Checkpoint& ck = out.checkpoint;
  EpochOrder order(data.size(), cfg.master_seed, "finetune_epoch");
  const auto per_step = static_cast<std::uint64_t>(cfg.batch_size) * static_cast<std::uint64_t>(cfg.grad_accum);

  ReferenceCache ref_cache(ref.params, data);
  std::vector<size_t> batch(per_step);
  for (int step = ck.step; step < last_step(cfg, stop_at); ++step) {
    for (std::uint64_t b = 0; b < per_step; ++b) batch[b] = order.at(static_cast<std::uint64_t>(step) * per_step + b);
    auto bl = pair_batch_loss(cfg.loss, cfg.hyper, ck.params, ref_cache, data, batch);
    if (!std::isfinite(bl.loss)) throw NumericError("finetune: non-finite loss at step " + std::to_string(step));
    const double lr = lr_at(step, cfg);
    auto next = adam_step(std::move(ck.params), bl.grad, std::move(ck.optimizer), lr, adam_options(cfg));
    ck.params = std::move(next.params);
    ck.optimizer = std::move(next.moments);
    ck.step = step + 1;
    MetricRecord rec{step, lr, bl.loss, bl.rpl, bl.rcl, bl.fallback_fraction};
    out.log.push_back(rec);
    push_tail(ck, rec);
  }
  return out;
}

}  // namespace residpo
