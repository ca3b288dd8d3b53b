#include "residpo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace residpo {

namespace {

AminoProbs softmax(const std::array<double, kNumAminoAcids>& logits, double temperature,
                   const std::array<double, kNumAminoAcids>& offset = {}) {
  AminoProbs p{};
  double mx = -INFINITY;
  for (int a = 0; a < kNumAminoAcids; ++a) mx = std::max(mx, logits[a] / temperature + offset[a]);
  double z = 0.0;
  for (int a = 0; a < kNumAminoAcids; ++a) {
    p[a] = std::exp(logits[a] / temperature + offset[a] - mx);
    z += p[a];
  }
  for (auto& v : p) v /= z;
  return p;
}

std::string structure_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%04d", index);
  return buf;
}

}  // namespace

HiddenTargetMap HiddenTargetMap::generate(std::uint64_t master_seed, double native_bias_scale) {
  HiddenTargetMap m;
  Rng rng(derive_seed(master_seed, "hidden_map"));
  for (auto& row : m.weights) {
    for (auto& w : row) w = rng.normal();
  }
  Rng bias_rng(derive_seed(master_seed, "native_bias"));
  for (auto& b : m.native_bias) b = native_bias_scale * bias_rng.normal();
  return m;
}

std::array<double, kNumAminoAcids> HiddenTargetMap::logits(const FeatureVector& f) const {
  std::array<double, kNumAminoAcids> out{};
  for (int a = 0; a < kNumAminoAcids; ++a) {
    double acc = 0.0;
    for (int k = 0; k < kFeatureDim; ++k) acc += weights[a][k] * f[k];
    out[a] = acc;
  }
  return out;
}

std::vector<StructureInstance> gen_structures(int count, LengthRange lengths, std::uint64_t seed) {
  if (count < 1) throw ConfigError("gen_structures: count must be >= 1");
  if (lengths.min < kMinLength || lengths.max > kMaxLength || lengths.min > lengths.max) {
    throw ConfigError("gen_structures: invalid length range [" + std::to_string(lengths.min) + ", " +
                      std::to_string(lengths.max) + "]");
  }
  std::vector<StructureInstance> out;
  out.reserve(static_cast<size_t>(count));
  const auto span = static_cast<std::uint64_t>(lengths.max - lengths.min + 1);
  for (int s = 0; s < count; ++s) {
    Rng rng(derive_seed(seed, "structure", {static_cast<std::uint64_t>(s)}));
    const int length = lengths.min + static_cast<int>(rng.below(span));
    StructureInstance inst{structure_id(s), std::vector<FeatureVector>(static_cast<size_t>(length))};
    for (auto& f : inst.features) {
      for (auto& v : f) v = rng.normal();
    }
    out.push_back(std::move(inst));
  }
  return out;
}

AminoProbs target_distribution(const HiddenTargetMap& map, const StructureInstance& s, int i,
                               double temperature) {
  if (i < 0 || i >= s.length()) {
    throw DataError("target_distribution: position " + std::to_string(i) + " out of range for '" +
                    s.id + "'");
  }
  return softmax(map.logits(s.features[static_cast<size_t>(i)]), temperature);
}

AminoProbs native_distribution(const HiddenTargetMap& map, const StructureInstance& s, int i,
                               double temperature) {
  if (i < 0 || i >= s.length()) {
    throw DataError("native_distribution: position " + std::to_string(i) + " out of range for '" + s.id + "'");
  }
  return softmax(map.logits(s.features[static_cast<size_t>(i)]), temperature, map.native_bias);
}

Sequence gen_native(const HiddenTargetMap& map, const StructureInstance& s, std::uint64_t seed,
                    double temperature) {
  Rng rng(seed);
  Sequence out;
  out.reserve(static_cast<size_t>(s.length()));
  for (int i = 0; i < s.length(); ++i) {
    const auto p = native_distribution(map, s, i, temperature);
    out.emplace_back(rng.categorical(p));
  }
  return out;
}

DatasetSplit split(const std::vector<std::string>& ids, double val_fraction, std::uint64_t seed) {
  if (ids.empty()) throw DataError("split: empty id list");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split: val_fraction must lie in (0, 1)");
  }
  std::vector<std::string> shuffled = ids;
  Rng rng(seed);
  rng.shuffle(shuffled);
  const auto n_val = static_cast<size_t>(std::lround(val_fraction * static_cast<double>(ids.size())));
  DatasetSplit out;
  out.val_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.train_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
  std::sort(out.val_ids.begin(), out.val_ids.end());
  std::sort(out.train_ids.begin(), out.train_ids.end());
  return out;
}

SyntheticDataset make_dataset(const DatasetSpec& spec, std::uint64_t master_seed) {
  SyntheticDataset ds;
  ds.master_seed = master_seed;
  ds.map = HiddenTargetMap::generate(master_seed, spec.native_bias_scale);
  ds.structures = gen_structures(spec.n_structures, spec.lengths, derive_seed(master_seed, "structures"));
  ds.natives.reserve(ds.structures.size());
  std::vector<std::string> ids;
  for (size_t i = 0; i < ds.structures.size(); ++i) {
    ds.natives.push_back(gen_native(ds.map, ds.structures[i],
                                    derive_seed(master_seed, "native", {static_cast<std::uint64_t>(i)})));
    ids.push_back(ds.structures[i].id);
  }
  ds.split = split(ids, spec.val_fraction, derive_seed(master_seed, "split"));
  return ds;
}

}  // namespace residpo
