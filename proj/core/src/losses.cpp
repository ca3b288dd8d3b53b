#include "residpo/losses.hpp"

#include <cmath>
#include <numeric>

namespace residpo {

void LossHyperparams::validate() const {
  std::string bad;
  auto check = [&bad](bool ok, const char* msg) {
    if (!ok) bad += std::string(bad.empty() ? "" : "; ") + msg;
  };
  check(alpha >= 0.0, "alpha must be >= 0");
  check(beta_thresh > 0.0 && beta_thresh <= 100.0, "beta_thresh must lie in (0, 100]");
  check(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  check(lambda >= 0.0, "lambda must be >= 0");
  check(beta_dpo > 0.0, "beta_dpo must be > 0");
  if (!bad.empty()) throw ConfigError(bad);
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Pretrain: return "pretrain";
    case LossKind::Dpo: return "dpo";
    case LossKind::Rpl: return "rpl";
    case LossKind::Rcl: return "rcl";
    case LossKind::Residpo: return "residpo";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  for (auto k : {LossKind::Pretrain, LossKind::Dpo, LossKind::Rpl, LossKind::Rcl, LossKind::Residpo}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected pretrain, dpo, rpl, rcl, residpo)");
}

void PairBatchItem::validate() const {
  const size_t n = plddt_winner.size();
  if (plddt_loser.size() != n || theta_winner.size() != n || theta_loser.size() != n ||
      ref_winner.size() != n || ref_loser.size() != n) {
    throw DataError("pair item: winner and loser vectors differ in length");
  }
}

double neg_log_sigmoid(double z) {
  return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void require_finite_totals(const PairBatchItem& item) {
  for (auto v : {item.theta_winner, item.theta_loser, item.ref_winner, item.ref_loser}) {
    if (!std::isfinite(sum(v))) throw NumericError("dpo_loss: non-finite log-probability input");
  }
}

struct Rcl {
  double value = 0.0;
  std::vector<int> set;
  std::vector<double> ref_probs;
};

Rcl compute_rcl(const PairBatchItem& item, const LossHyperparams& h) {
  Rcl r;
  r.ref_probs.resize(item.ref_winner.size());
  for (size_t j = 0; j < r.ref_probs.size(); ++j) r.ref_probs[j] = std::exp(item.ref_winner[j]);
  r.set = rcl_index_set(item.plddt_winner, r.ref_probs, h);
  if (r.set.empty()) return r;
  double acc = 0.0;
  for (int j : r.set) {
    const auto u = static_cast<size_t>(j);
    acc += r.ref_probs[u] * (item.ref_winner[u] - item.theta_winner[u]);
  }
  r.value = acc / static_cast<double>(r.set.size());
  return r;
}

double rpl_margin(const PairBatchItem& item, const ResidueSet& set) {
  double acc = 0.0;
  for (int i : set.positions) {
    const auto u = static_cast<size_t>(i);
    acc += item.theta_winner[u] - item.theta_loser[u];
  }
  return acc / static_cast<double>(set.positions.size());
}

}  // namespace

double dpo_loss(const PairBatchItem& item, const LossHyperparams& h) {
  item.validate();
  require_finite_totals(item);
  const double z = h.beta_dpo * ((sum(item.theta_winner) - sum(item.ref_winner)) -
                                 (sum(item.theta_loser) - sum(item.ref_loser)));
  return neg_log_sigmoid(z);
}

ResidueSet rpl_index_set(std::span<const double> plddt_winner, std::span<const double> plddt_loser,
                         double alpha) {
  if (plddt_winner.size() != plddt_loser.size()) {
    throw DataError("rpl_index_set: winner and loser lengths differ");
  }
  ResidueSet out;
  for (size_t i = 0; i < plddt_winner.size(); ++i) {
    if (plddt_winner[i] - plddt_loser[i] > alpha) out.positions.push_back(static_cast<int>(i));
  }
  if (out.positions.empty()) {
    out.fallback = true;
    out.positions.resize(plddt_winner.size());
    std::iota(out.positions.begin(), out.positions.end(), 0);
  }
  return out;
}

double rpl_loss(const PairBatchItem& item, const LossHyperparams& h) {
  item.validate();
  const auto set = rpl_index_set(item.plddt_winner, item.plddt_loser, h.alpha);
  return neg_log_sigmoid(rpl_margin(item, set));
}

std::vector<int> rcl_index_set(std::span<const double> plddt_winner, std::span<const double> ref_probs,
                               const LossHyperparams& h) {
  if (plddt_winner.size() != ref_probs.size()) {
    throw DataError("rcl_index_set: pLDDT and reference probability lengths differ");
  }
  std::vector<int> out;
  for (size_t j = 0; j < plddt_winner.size(); ++j) {
    if (plddt_winner[j] > h.beta_thresh && ref_probs[j] > h.gamma) out.push_back(static_cast<int>(j));
  }
  return out;
}

double rcl_loss(const PairBatchItem& item, const LossHyperparams& h) {
  item.validate();
  return compute_rcl(item, h).value;
}

ResidpoLoss residpo_loss(const PairBatchItem& item, const LossHyperparams& h) {
  ResidpoLoss out;
  out.rpl = rpl_loss(item, h);
  out.rcl = rcl_loss(item, h);
  out.total = out.rpl + h.lambda * out.rcl;
  return out;
}

PairLoss evaluate_pair_loss(LossKind kind, const PairBatchItem& item, const LossHyperparams& h) {
  item.validate();
  const size_t n = item.plddt_winner.size();
  PairLoss out;
  out.d_theta_winner.assign(n, 0.0);
  out.d_theta_loser.assign(n, 0.0);

  switch (kind) {
    case LossKind::Dpo: {
      require_finite_totals(item);
      const double z = h.beta_dpo * ((sum(item.theta_winner) - sum(item.ref_winner)) -
                                     (sum(item.theta_loser) - sum(item.ref_loser)));
      out.total = neg_log_sigmoid(z);
      const double dz = -sigmoid(-z) * h.beta_dpo;
      for (size_t i = 0; i < n; ++i) {
        out.d_theta_winner[i] = dz;
        out.d_theta_loser[i] = -dz;
      }
      return out;
    }
    case LossKind::Rpl:
    case LossKind::Rcl:
    case LossKind::Residpo: {
      const bool with_rpl = kind != LossKind::Rcl;
      const bool with_rcl = kind != LossKind::Rpl;
      if (with_rpl) {
        const auto set = rpl_index_set(item.plddt_winner, item.plddt_loser, h.alpha);
        const double m = rpl_margin(item, set);
        out.rpl = neg_log_sigmoid(m);
        out.fallback = set.fallback;
        const double dm = -sigmoid(-m) / static_cast<double>(set.positions.size());
        for (int i : set.positions) {
          out.d_theta_winner[static_cast<size_t>(i)] += dm;
          out.d_theta_loser[static_cast<size_t>(i)] -= dm;
        }
      }
      if (with_rcl) {
        const auto rcl = compute_rcl(item, h);
        out.rcl = rcl.value;
        const double weight = kind == LossKind::Rcl ? 1.0 : h.lambda;
        if (!rcl.set.empty()) {
          const double scale = weight / static_cast<double>(rcl.set.size());
          for (int j : rcl.set) {
            out.d_theta_winner[static_cast<size_t>(j)] -= scale * rcl.ref_probs[static_cast<size_t>(j)];
          }
        }
      }
      out.total = kind == LossKind::Rpl ? out.rpl
                  : kind == LossKind::Rcl ? out.rcl
                                          : out.rpl + h.lambda * out.rcl;
      return out;
    }
    case LossKind::Pretrain:
      break;
  }
  throw ConfigError("evaluate_pair_loss: pretrain is not a pair loss");
}

}  // namespace residpo
