#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "residpo/losses.hpp"
#include "residpo/policy.hpp"

namespace residpo {

/// Central finite differences of a scalar function of the parameters.
/// Step for coordinate k is rel_step * max(1, |theta_k|).
double central_difference(const std::function<double(const PolicyParams&)>& f, const PolicyParams& at, size_t k,
                          double rel_step = 1e-4);

inline constexpr double kGradCheckFloor = 1e-6;

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double relative_error(double analytic, double numeric, double floor = kGradCheckFloor);

struct GradCheckResult {
  std::string loss;
  int cases = 0;
  int probes = 0;
  int kink_skips = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  int cases = 5;           // pairs (or structures for the pretraining loss)
  int probes = 64;         // coordinates per case
  double rel_step = 1e-4;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
};

/// Finite-difference check of every loss (pretrain, dpo, rpl, rcl, residpo)
/// on a seeded random fixture. Probes whose step crosses a ReLU kink are redrawn.
std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& opts);

}  // namespace residpo
