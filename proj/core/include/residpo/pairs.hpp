#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "residpo/core.hpp"

namespace residpo {

enum class SamplingStrategy { Rejection, Application, Relative };

std::string_view to_string(SamplingStrategy s);
/// Throws ConfigError naming the valid strategies.
SamplingStrategy parse_strategy(std::string_view name);

struct PreferencePair {
  std::string structure_id;
  int winner_index = 0;
  int loser_index = 0;
  SamplingStrategy strategy = SamplingStrategy::Relative;
  double score_gap = 0.0;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

struct PairParams {
  int rejection_k = 3;
  double application_hi = 80.0;
  double application_lo = 75.0;
  double delta = 10.0;
  /// Per-structure cap applied to relative pairs when building a training set; 0 disables it.
  int relative_cap = 16;
};

/// Winner is the highest-mean sequence (lowest index among ties); up to k
/// strictly lower-scoring sequences are drawn without replacement as losers.
std::vector<PreferencePair> rejection_sampling(const std::vector<ScoredSequence>& pool, int k,
                                               std::uint64_t seed);

/// Every (w, l) with mean(w) > hi and mean(l) < lo.
std::vector<PreferencePair> application_sampling(const std::vector<ScoredSequence>& pool, double hi = 80.0,
                                                 double lo = 75.0);

/// Every ordered (i, j) with mean(i) - mean(j) > delta.
std::vector<PreferencePair> relative_sampling(const std::vector<ScoredSequence>& pool, double delta = 10.0);

/// Uniform subsample (by seed) down to at most cap pairs, returned in (winner, loser) order.
std::vector<PreferencePair> cap_pairs(std::vector<PreferencePair> pairs, int cap, std::uint64_t seed);

/// Strategy dispatch for one structure's pool, including the relative cap.
std::vector<PreferencePair> make_pairs(const std::vector<ScoredSequence>& pool, SamplingStrategy strategy,
                                       const PairParams& params, std::uint64_t seed);

}  // namespace residpo
