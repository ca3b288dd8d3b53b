#pragma once

#include <string>
#include <vector>

#include "residpo/core.hpp"
#include "residpo/evalx.hpp"
#include "residpo/synth.hpp"

namespace residpo::test {

/// Pool whose members carry the given mean scores (one residue each).
inline std::vector<ScoredSequence> pool_from_means(const std::vector<double>& means, const std::string& id = "s") {
  std::vector<ScoredSequence> pool;
  for (double m : means) pool.push_back(make_scored(id, {AminoAcid(0)}, {m}));
  return pool;
}

inline StructureInstance random_structure(int length, std::uint64_t seed) {
  return gen_structures(1, {length, length}, seed).front();
}

/// A scaled-down experiment that prepares in well under a second.
inline ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dataset.n_structures = 40;
  cfg.pretrain.total_steps = 150;
  cfg.pretrain.batch_size = 4;
  cfg.pretrain.grad_accum = 2;
  cfg.finetune.total_steps = 30;
  cfg.finetune.batch_size = 4;
  cfg.finetune.grad_accum = 2;
  cfg.design.n_seqs = 4;
  return cfg;
}

}  // namespace residpo::test
