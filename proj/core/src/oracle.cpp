#include "residpo/oracle.hpp"

#include <algorithm>

namespace residpo {

std::vector<double> compatibility(const HiddenTargetMap& map, const StructureInstance& s,
                                  const Sequence& y) {
  if (static_cast<int>(y.size()) != s.length()) {
    throw DataError("oracle: sequence length " + std::to_string(y.size()) +
                    " does not match structure '" + s.id + "' length " + std::to_string(s.length()));
  }
  std::vector<double> compat(y.size());
  for (int j = 0; j < s.length(); ++j) {
    const auto p = target_distribution(map, s, j);
    const double best = *std::max_element(p.begin(), p.end());
    compat[static_cast<size_t>(j)] = p[static_cast<size_t>(y[static_cast<size_t>(j)].index())] / best;
  }
  return compat;
}

std::vector<double> window_scores(std::span<const double> compat, int window_radius) {
  if (window_radius < 0 || window_radius > 8) {
    throw ConfigError("oracle: window_radius must lie in [0, 8]");
  }
  const int n = static_cast<int>(compat.size());
  std::vector<double> out(compat.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - window_radius);
    const int hi = std::min(n - 1, i + window_radius);
    double acc = 0.0;
    for (int j = lo; j <= hi; ++j) acc += compat[static_cast<size_t>(j)];
    out[static_cast<size_t>(i)] = OracleConfig::kScale * acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::vector<double> score(const HiddenTargetMap& map, const StructureInstance& s, const Sequence& y,
                          const OracleConfig& cfg) {
  return window_scores(compatibility(map, s, y), cfg.window_radius);
}

ScoredSequence score_sequence(const HiddenTargetMap& map, const StructureInstance& s, Sequence y,
                              const OracleConfig& cfg) {
  auto plddt = score(map, s, y, cfg);
  return make_scored(s.id, std::move(y), std::move(plddt));
}

double mean_score(const ScoredSequence& y) { return arithmetic_mean(y.plddt); }

Sequence oracle_argmax(const HiddenTargetMap& map, const StructureInstance& s) {
  Sequence out;
  for (int i = 0; i < s.length(); ++i) {
    const auto p = target_distribution(map, s, i);
    out.emplace_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
  }
  return out;
}

}  // namespace residpo
