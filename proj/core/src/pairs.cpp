#include "residpo/pairs.hpp"

#include <algorithm>

namespace residpo {

namespace {

PreferencePair make_pair(const std::vector<ScoredSequence>& pool, int w, int l, SamplingStrategy s) {
  const auto& win = pool[static_cast<size_t>(w)];
  return {win.structure_id, w, l, s, win.mean_plddt - pool[static_cast<size_t>(l)].mean_plddt};
}

bool by_indices(const PreferencePair& a, const PreferencePair& b) {
  return std::tie(a.winner_index, a.loser_index) < std::tie(b.winner_index, b.loser_index);
}

}  // namespace

std::string_view to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::Rejection: return "rejection";
    case SamplingStrategy::Application: return "application";
    case SamplingStrategy::Relative: return "relative";
  }
  return "?";
}

SamplingStrategy parse_strategy(std::string_view name) {
  for (auto s : {SamplingStrategy::Rejection, SamplingStrategy::Application, SamplingStrategy::Relative}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) +
                    "' (valid strategies: rejection, application, relative)");
}

std::vector<PreferencePair> rejection_sampling(const std::vector<ScoredSequence>& pool, int k,
                                               std::uint64_t seed) {
  if (pool.size() < 2) throw DataError("rejection_sampling: pool needs at least 2 sequences");
  if (k < 1) throw ConfigError("rejection_sampling: k must be >= 1");
  int winner = 0;
  for (int i = 1; i < static_cast<int>(pool.size()); ++i) {
    if (pool[static_cast<size_t>(i)].mean_plddt > pool[static_cast<size_t>(winner)].mean_plddt) winner = i;
  }
  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
    if (pool[static_cast<size_t>(i)].mean_plddt < pool[static_cast<size_t>(winner)].mean_plddt) {
      candidates.push_back(i);
    }
  }
  Rng rng(seed);
  rng.shuffle(candidates);
  candidates.resize(std::min(candidates.size(), static_cast<size_t>(k)));
  std::sort(candidates.begin(), candidates.end());

  std::vector<PreferencePair> out;
  for (int l : candidates) out.push_back(make_pair(pool, winner, l, SamplingStrategy::Rejection));
  return out;
}

std::vector<PreferencePair> application_sampling(const std::vector<ScoredSequence>& pool, double hi,
                                                 double lo) {
  if (!(hi > lo)) throw ConfigError("application_sampling: hi must exceed lo");
  std::vector<PreferencePair> out;
  for (int w = 0; w < static_cast<int>(pool.size()); ++w) {
    if (!(pool[static_cast<size_t>(w)].mean_plddt > hi)) continue;
    for (int l = 0; l < static_cast<int>(pool.size()); ++l) {
      if (pool[static_cast<size_t>(l)].mean_plddt < lo) {
        out.push_back(make_pair(pool, w, l, SamplingStrategy::Application));
      }
    }
  }
  return out;
}

std::vector<PreferencePair> relative_sampling(const std::vector<ScoredSequence>& pool, double delta) {
  if (delta < 0.0) throw ConfigError("relative_sampling: delta must be >= 0");
  std::vector<PreferencePair> out;
  for (int w = 0; w < static_cast<int>(pool.size()); ++w) {
    for (int l = 0; l < static_cast<int>(pool.size()); ++l) {
      if (pool[static_cast<size_t>(w)].mean_plddt - pool[static_cast<size_t>(l)].mean_plddt > delta) {
        out.push_back(make_pair(pool, w, l, SamplingStrategy::Relative));
      }
    }
  }
  return out;
}

std::vector<PreferencePair> cap_pairs(std::vector<PreferencePair> pairs, int cap, std::uint64_t seed) {
  if (cap <= 0 || pairs.size() <= static_cast<size_t>(cap)) return pairs;
  Rng rng(seed);
  rng.shuffle(pairs);
  pairs.resize(static_cast<size_t>(cap));
  std::sort(pairs.begin(), pairs.end(), by_indices);
  return pairs;
}

std::vector<PreferencePair> make_pairs(const std::vector<ScoredSequence>& pool, SamplingStrategy strategy,
                                       const PairParams& params, std::uint64_t seed) {
  switch (strategy) {
    case SamplingStrategy::Rejection:
      return rejection_sampling(pool, params.rejection_k, seed);
    case SamplingStrategy::Application:
      return application_sampling(pool, params.application_hi, params.application_lo);
    case SamplingStrategy::Relative:
      return cap_pairs(relative_sampling(pool, params.delta), params.relative_cap, seed);
  }
  return {};
}

}  // namespace residpo
