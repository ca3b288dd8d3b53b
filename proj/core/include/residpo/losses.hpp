#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "residpo/core.hpp"

namespace residpo {

struct LossHyperparams {
  double alpha = 10.0;        // per-residue pLDDT margin for the preference set
  double beta_thresh = 80.0;  // pLDDT threshold for the constraint set
  double gamma = 0.5;         // reference-confidence threshold for the constraint set
  double lambda = 0.01;       // constraint weight
  double beta_dpo = 0.1;      // sequence-level DPO strength

  /// Throws ConfigError listing every violated bound.
  void validate() const;

  friend bool operator==(const LossHyperparams&, const LossHyperparams&) = default;
};

enum class LossKind { Pretrain, Dpo, Rpl, Rcl, Residpo };

std::string_view to_string(LossKind kind);
/// Throws ConfigError for unknown names.
LossKind parse_loss_kind(std::string_view name);

/// One preference pair with per-residue log-probabilities of both sequences
/// under the trained policy and the frozen reference.
struct PairBatchItem {
  std::span<const double> plddt_winner;
  std::span<const double> plddt_loser;
  std::span<const double> theta_winner;
  std::span<const double> theta_loser;
  std::span<const double> ref_winner;
  std::span<const double> ref_loser;

  int length() const { return static_cast<int>(plddt_winner.size()); }
  /// Throws DataError when the six vectors disagree in length.
  void validate() const;
};

/// Numerically stable -log(sigmoid(z)).
double neg_log_sigmoid(double z);
double sigmoid(double z);

double dpo_loss(const PairBatchItem& item, const LossHyperparams& h);

struct ResidueSet {
  std::vector<int> positions;
  bool fallback = false;
};

/// { i : plddt_w[i] - plddt_l[i] > alpha }, or every position with
/// fallback = true when that set is empty.
ResidueSet rpl_index_set(std::span<const double> plddt_winner, std::span<const double> plddt_loser,
                         double alpha);

/// -log sigmoid(mean over the set of [log pi(y_w^i) - log pi(y_l^i)]), policy terms only.
double rpl_loss(const PairBatchItem& item, const LossHyperparams& h);

/// { j : plddt_w[j] > beta_thresh and ref_prob[j] > gamma }; may be empty.
std::vector<int> rcl_index_set(std::span<const double> plddt_winner, std::span<const double> ref_probs,
                               const LossHyperparams& h);

/// Mean over the set of ref_j * log(ref_j / pi_j) on the realized winner residue; 0 on an empty set.
double rcl_loss(const PairBatchItem& item, const LossHyperparams& h);

struct ResidpoLoss {
  double total = 0.0;
  double rpl = 0.0;
  double rcl = 0.0;
};

ResidpoLoss residpo_loss(const PairBatchItem& item, const LossHyperparams& h);

/// Loss value, its components, and the adjoint with respect to the policy's
/// per-residue log-probabilities of the winner and the loser.
struct PairLoss {
  double total = 0.0;
  double rpl = 0.0;
  double rcl = 0.0;
  bool fallback = false;
  std::vector<double> d_theta_winner;
  std::vector<double> d_theta_loser;
};

/// kind must be one of Dpo, Rpl, Rcl, Residpo.
PairLoss evaluate_pair_loss(LossKind kind, const PairBatchItem& item, const LossHyperparams& h);

}  // namespace residpo
