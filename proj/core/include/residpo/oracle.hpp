#pragma once

#include <vector>

#include "residpo/core.hpp"
#include "residpo/synth.hpp"

namespace residpo {

struct OracleConfig {
  int window_radius = 2;
  static constexpr double kScale = 100.0;
};

/// p_j[y_j] / max_a p_j[a] for every position j.
std::vector<double> compatibility(const HiddenTargetMap& map, const StructureInstance& s,
                                  const Sequence& y);

/// Windowed mean of per-position compatibilities, scaled to (0, 100].
/// Windows are truncated at the chain ends.
std::vector<double> window_scores(std::span<const double> compat, int window_radius);

/// Per-residue pLDDT stand-in. Throws DataError on a length mismatch.
std::vector<double> score(const HiddenTargetMap& map, const StructureInstance& s, const Sequence& y,
                          const OracleConfig& cfg = {});

ScoredSequence score_sequence(const HiddenTargetMap& map, const StructureInstance& s, Sequence y,
                              const OracleConfig& cfg = {});

double mean_score(const ScoredSequence& y);

/// Per-position argmax of the hidden target distribution; scores 100 everywhere.
Sequence oracle_argmax(const HiddenTargetMap& map, const StructureInstance& s);

}  // namespace residpo
