#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "residpo/core.hpp"

namespace residpo {

/// Position-wise categorical model over amino acids:
///   g_i      = [f_i, mean(f_j : |j - i| <= 1)]             (16)
///   logits_i = W2 relu(W1 g_i + b1) + b2                   (20)
/// All parameters live in one flat buffer (W1, b1, W2, b2 in that order)
/// so the optimizer and the gradient checker can treat them uniformly.
class PolicyParams {
 public:
  static constexpr int kHidden = 32;
  static constexpr int kInput = 2 * kFeatureDim;
  static constexpr size_t kW1 = 0;
  static constexpr size_t kB1 = kW1 + kHidden * kInput;
  static constexpr size_t kW2 = kB1 + kHidden;
  static constexpr size_t kB2 = kW2 + kNumAminoAcids * kHidden;
  static constexpr size_t kCount = kB2 + kNumAminoAcids;
  static_assert(kCount == 1204);

  PolicyParams() : data_(kCount, 0.0) {}

  /// Weights ~ N(0, 0.1^2), biases zero.
  static PolicyParams init(std::uint64_t seed, double weight_std = 0.1);

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  /// Row-major [kHidden][kInput].
  std::span<const double> W1() const { return flat().subspan(kW1, kB1 - kW1); }
  std::span<const double> b1() const { return flat().subspan(kB1, kHidden); }
  /// Row-major [20][kHidden].
  std::span<const double> W2() const { return flat().subspan(kW2, kB2 - kW2); }
  std::span<const double> b2() const { return flat().subspan(kB2, kNumAminoAcids); }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  std::vector<double> data_;
};

/// Same layout as PolicyParams.
using Gradient = PolicyParams;

/// L x 20 matrix of log-probabilities, row-major.
struct PerResidueLogProbs {
  int length = 0;
  std::vector<double> values;

  std::span<const double> row(int i) const {
    return std::span<const double>(values).subspan(static_cast<size_t>(i) * kNumAminoAcids,
                                                   kNumAminoAcids);
  }
  double at(int i, AminoAcid a) const {
    return values[static_cast<size_t>(i) * kNumAminoAcids + static_cast<size_t>(a.index())];
  }
};

/// Intermediate activations kept for the backward pass.
struct ForwardPass {
  int length = 0;
  std::vector<double> inputs;  // L x 16
  std::vector<double> pre;     // L x 32
  std::vector<double> hidden;  // L x 32
  PerResidueLogProbs logp;
};

ForwardPass forward_pass(const PolicyParams& params, const StructureInstance& s);
PerResidueLogProbs forward(const PolicyParams& params, const StructureInstance& s);

/// Neighbour-aggregated input g_i (window radius 1, truncated at the ends).
std::vector<double> aggregate_inputs(const StructureInstance& s);

struct SequenceLogProb {
  double total = 0.0;
  std::vector<double> per_residue;
};

SequenceLogProb seq_log_prob(const PerResidueLogProbs& logp, const Sequence& y);
SequenceLogProb seq_log_prob(const PolicyParams& params, const StructureInstance& s, const Sequence& y);

struct SamplingOptions {
  double temperature = 1.0;
  std::map<int, AminoAcid> fixed;
  std::vector<AminoAcid> banned;
};

/// Independent per-position draws from softmax(logits / temperature) with
/// banned residues removed. Fixed positions are copied verbatim.
Sequence sample(const PerResidueLogProbs& logp, const SamplingOptions& opts, std::uint64_t seed);
Sequence sample(const PolicyParams& params, const StructureInstance& s, const SamplingOptions& opts,
                std::uint64_t seed);

/// Per-position argmax (lowest index wins ties).
Sequence argmax_sequence(const PerResidueLogProbs& logp);

/// dLoss / dlogp, same L x 20 layout as PerResidueLogProbs.
struct LogProbAdjoint {
  int length = 0;
  std::vector<double> values;

  explicit LogProbAdjoint(int l = 0)
      : length(l), values(static_cast<size_t>(l) * kNumAminoAcids, 0.0) {}
  double& at(int i, AminoAcid a) {
    return values[static_cast<size_t>(i) * kNumAminoAcids + static_cast<size_t>(a.index())];
  }
};

/// Adds scale * dLoss/dparams to grad, back-propagating adj through the
/// log-softmax and the MLP. Throws NumericError naming the first non-finite tensor.
void accumulate_gradient(const PolicyParams& params, const ForwardPass& pass, const LogProbAdjoint& adj,
                         double scale, Gradient& grad);

/// A scalar loss of the log-probability matrix that also fills in its adjoint.
using LogProbLoss = std::function<double(const PerResidueLogProbs&, LogProbAdjoint&)>;

struct LossGradient {
  double loss = 0.0;
  Gradient grad;
};

LossGradient grad_loss(const PolicyParams& params, const StructureInstance& s, const LogProbLoss& loss);

/// Throws NumericError("<name> ...") if any value is non-finite.
void require_finite(std::span<const double> values, const char* name);

}  // namespace residpo
