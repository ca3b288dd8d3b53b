#include "residpo/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace residpo {

AminoAcid::AminoAcid(int index) {
  if (index < 0 || index >= kNumAminoAcids) {
    throw DataError("amino acid index out of range: " + std::to_string(index));
  }
  index_ = static_cast<std::uint8_t>(index);
}

AminoAcid AminoAcid::from_code(char code) {
  const auto pos = kAlphabet.find(code);
  if (pos == std::string_view::npos) {
    throw DataError(std::string("unknown amino acid code '") + code + "'");
  }
  return AminoAcid(static_cast<int>(pos));
}

std::string to_string(const Sequence& seq) {
  std::string out;
  out.reserve(seq.size());
  for (auto aa : seq) out.push_back(aa.code());
  return out;
}

Sequence parse_sequence(std::string_view letters) {
  Sequence seq;
  seq.reserve(letters.size());
  for (char c : letters) seq.push_back(AminoAcid::from_code(c));
  return seq;
}

void validate(const StructureInstance& s) {
  if (s.length() < kMinLength || s.length() > kMaxLength) {
    throw DataError("structure '" + s.id + "' has length " + std::to_string(s.length()) +
                    ", expected 8..512");
  }
  for (const auto& f : s.features) {
    for (double v : f) {
      if (!std::isfinite(v)) throw DataError("structure '" + s.id + "' has a non-finite feature");
    }
  }
}

double arithmetic_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

ScoredSequence make_scored(std::string structure_id, Sequence residues, std::vector<double> plddt) {
  if (residues.size() != plddt.size()) {
    throw DataError("sequence and pLDDT vector lengths differ for structure '" + structure_id + "'");
  }
  ScoredSequence out{std::move(structure_id), std::move(residues), std::move(plddt), 0.0};
  out.mean_plddt = arithmetic_mean(out.plddt);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::span<const std::uint64_t> indices) {
  if (tag.empty()) throw ConfigError("derive_seed: tag must be non-empty");
  std::uint64_t s = splitmix64(master ^ splitmix64(fnv1a64(tag)));
  for (auto k : indices) s = splitmix64(s ^ splitmix64(k + 0x9e3779b97f4a7c15ULL));
  return s;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices) {
  return derive_seed(master, tag, std::span<const std::uint64_t>(indices.begin(), indices.size()));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = uniform() * total;
  double acc = 0.0;
  int last_positive = -1;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

}  // namespace residpo
