#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace residpo {

inline constexpr int kNumAminoAcids = 20;
inline constexpr int kFeatureDim = 8;
inline constexpr int kMinLength = 8;
inline constexpr int kMaxLength = 512;

/// Failure categories; the CLI maps them onto exit codes 2/3/4.
enum class ErrorKind { Config, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// One of the 20 canonical residues, indexed in alphabetical one-letter order
/// A,C,D,E,F,G,H,I,K,L,M,N,P,Q,R,S,T,V,W,Y.
class AminoAcid {
 public:
  static constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWY";

  constexpr AminoAcid() = default;
  explicit AminoAcid(int index);

  static AminoAcid from_code(char code);

  constexpr int index() const noexcept { return index_; }
  constexpr char code() const noexcept { return kAlphabet[static_cast<size_t>(index_)]; }

  friend constexpr bool operator==(AminoAcid, AminoAcid) = default;
  friend constexpr auto operator<=>(AminoAcid, AminoAcid) = default;

 private:
  std::uint8_t index_ = 0;
};

using Sequence = std::vector<AminoAcid>;

std::string to_string(const Sequence& seq);
Sequence parse_sequence(std::string_view letters);

using FeatureVector = std::array<double, kFeatureDim>;

/// Synthetic backbone: one feature vector per position.
struct StructureInstance {
  std::string id;
  std::vector<FeatureVector> features;

  int length() const noexcept { return static_cast<int>(features.size()); }
};

/// Throws DataError if the length is outside [8, 512] or a feature is non-finite.
void validate(const StructureInstance& s);

/// A candidate sequence with its per-residue oracle scores.
struct ScoredSequence {
  std::string structure_id;
  Sequence residues;
  std::vector<double> plddt;
  double mean_plddt = 0.0;
};

/// Builds a ScoredSequence, computing mean_plddt from the per-residue scores.
ScoredSequence make_scored(std::string structure_id, Sequence residues, std::vector<double> plddt);

double arithmetic_mean(std::span<const double> values);

// ---------------------------------------------------------------------------
// Seeds and random draws

struct SeedManifest {
  std::uint64_t master_seed = 0;
  std::string generator_name = "mt19937_64";
  std::string derived_seed_rule =
      "splitmix64 chain: s = mix(master ^ mix(fnv1a64(tag))); for each index k: s = mix(s ^ mix(k + golden))";
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Pure function of (master, tag, indices). Throws ConfigError on an empty tag.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices = {});
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::span<const std::uint64_t> indices);

/// Portable random stream. The distributions are written out here so that
/// draws do not depend on the standard library's distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  /// Index drawn proportionally to non-negative weights.
  int categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace residpo
