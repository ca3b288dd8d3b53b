#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "residpo/core.hpp"

namespace residpo {

/// Sharpening temperature used when drawing native sequences.
inline constexpr double kNativeTemperature = 0.5;

/// Default standard deviation of the native composition bias.
inline constexpr double kNativeBiasScale = 2.0;

/// Global amino-acid logit map (20 x 8) plus the structure-independent
/// composition bias carried by native sequences. Oracle-private: the policy
/// never sees it. The oracle scores against the map alone.
struct HiddenTargetMap {
  std::array<std::array<double, kFeatureDim>, kNumAminoAcids> weights{};
  std::array<double, kNumAminoAcids> native_bias{};

  static HiddenTargetMap generate(std::uint64_t master_seed, double native_bias_scale = kNativeBiasScale);

  std::array<double, kNumAminoAcids> logits(const FeatureVector& f) const;
};

using AminoProbs = std::array<double, kNumAminoAcids>;

struct LengthRange {
  int min = 24;
  int max = 64;
};

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
};

/// Structure ids are "s0000", "s0001", ... in generation order.
std::vector<StructureInstance> gen_structures(int count, LengthRange lengths, std::uint64_t seed);

/// softmax(W* f_i / temperature). Throws DataError when i is out of range.
AminoProbs target_distribution(const HiddenTargetMap& map, const StructureInstance& s, int i,
                               double temperature = 1.0);

/// Native residues: softmax(W* f_i / temperature + native_bias) per position.
AminoProbs native_distribution(const HiddenTargetMap& map, const StructureInstance& s, int i,
                               double temperature = kNativeTemperature);

Sequence gen_native(const HiddenTargetMap& map, const StructureInstance& s, std::uint64_t seed,
                    double temperature = kNativeTemperature);

/// Deterministic shuffle, then the first round(val_fraction * N) ids
/// (half away from zero) become the validation set.
DatasetSplit split(const std::vector<std::string>& ids, double val_fraction, std::uint64_t seed);

/// Everything generated from one master seed.
struct SyntheticDataset {
  std::uint64_t master_seed = 0;
  HiddenTargetMap map;
  std::vector<StructureInstance> structures;
  std::vector<Sequence> natives;  // parallel to structures
  DatasetSplit split;
};

struct DatasetSpec {
  int n_structures = 250;
  LengthRange lengths;
  double val_fraction = 0.2;
  double native_bias_scale = kNativeBiasScale;
};

SyntheticDataset make_dataset(const DatasetSpec& spec, std::uint64_t master_seed);

}  // namespace residpo
