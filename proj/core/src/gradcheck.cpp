#include "residpo/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "residpo/oracle.hpp"
#include "residpo/synth.hpp"
#include "residpo/trainer.hpp"

namespace residpo {

double central_difference(const std::function<double(const PolicyParams&)>& f, const PolicyParams& at, size_t k,
                          double rel_step) {
  const double h = rel_step * std::max(1.0, std::abs(at.flat()[k]));
  PolicyParams plus = at;
  PolicyParams minus = at;
  plus.flat()[k] += h;
  minus.flat()[k] -= h;
  return (f(plus) - f(minus)) / (2.0 * h);
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace {

/// Sign pattern of every hidden pre-activation.
std::vector<bool> relu_pattern(const PolicyParams& p, const StructureInstance& s) {
  const auto pass = forward_pass(p, s);
  std::vector<bool> out(pass.pre.size());
  for (size_t i = 0; i < pass.pre.size(); ++i) out[i] = pass.pre[i] > 0.0;
  return out;
}

bool crosses_kink(const PolicyParams& at, const StructureInstance& s, size_t k, double rel_step) {
  if (k >= PolicyParams::kW2) return false;  // output layer has no kink downstream
  const double h = rel_step * std::max(1.0, std::abs(at.flat()[k]));
  PolicyParams plus = at;
  PolicyParams minus = at;
  plus.flat()[k] += h;
  minus.flat()[k] -= h;
  const auto base = relu_pattern(at, s);
  return relu_pattern(plus, s) != base || relu_pattern(minus, s) != base;
}

struct Fixture {
  StructureInstance structure;
  ScoredSequence winner;
  ScoredSequence loser;
  Sequence native;
};

std::vector<Fixture> make_fixtures(const GradCheckOptions& opts, const PolicyParams& ref) {
  const auto map = HiddenTargetMap::generate(derive_seed(opts.seed, "gradcheck_map"));
  const auto structures = gen_structures(opts.cases, {12, 24}, derive_seed(opts.seed, "gradcheck_structures"));
  std::vector<Fixture> out;
  for (size_t c = 0; c < structures.size(); ++c) {
    const auto& s = structures[c];
    Rng rng(derive_seed(opts.seed, "gradcheck_case", {c}));
    // Winner: mostly the reference argmax (so the constraint set is populated),
    // with high per-residue scores; loser: uniform random with lower scores.
    auto w = argmax_sequence(forward(ref, s));
    for (auto& aa : w) {
      if (rng.uniform() < 0.2) aa = AminoAcid(static_cast<int>(rng.below(kNumAminoAcids)));
    }
    Sequence l;
    std::vector<double> pw;
    std::vector<double> pl;
    for (int i = 0; i < s.length(); ++i) {
      l.emplace_back(static_cast<int>(rng.below(kNumAminoAcids)));
      pw.push_back(60.0 + 40.0 * rng.uniform());
      pl.push_back(30.0 + 50.0 * rng.uniform());
    }
    out.push_back({s, make_scored(s.id, w, pw), make_scored(s.id, l, pl), gen_native(map, s, rng.next_u64())});
  }
  return out;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& opts) {
  const auto ref = PolicyParams::init(derive_seed(opts.seed, "gradcheck_ref"), 0.6);
  // The trained policy sits near, not at, the reference.
  PolicyParams theta = ref;
  {
    Rng rng(derive_seed(opts.seed, "gradcheck_theta"));
    for (auto& v : theta.flat()) v += 0.05 * rng.normal();
  }
  const auto fixtures = make_fixtures(opts, ref);
  LossHyperparams h;

  std::vector<GradCheckResult> results;
  for (auto kind : {LossKind::Pretrain, LossKind::Dpo, LossKind::Rpl, LossKind::Rcl, LossKind::Residpo}) {
    GradCheckResult res;
    res.loss = std::string(to_string(kind));
    for (size_t c = 0; c < fixtures.size(); ++c) {
      const auto& fx = fixtures[c];
      std::function<double(const PolicyParams&)> value;
      Gradient analytic;
      if (kind == LossKind::Pretrain) {
        const NativeCorpus corpus{{fx.structure}, {fx.native}};
        value = [corpus](const PolicyParams& p) { return native_nll(p, corpus); };
        const double n = static_cast<double>(fx.native.size());
        analytic = grad_loss(theta, fx.structure, [&](const PerResidueLogProbs& logp, LogProbAdjoint& adj) {
                     double loss = 0.0;
                     for (int i = 0; i < logp.length; ++i) {
                       loss -= logp.at(i, fx.native[static_cast<size_t>(i)]) / n;
                       adj.at(i, fx.native[static_cast<size_t>(i)]) -= 1.0 / n;
                     }
                     return loss;
                   }).grad;
      } else {
        const auto ref_logp = forward(ref, fx.structure);
        const auto rw = seq_log_prob(ref_logp, fx.winner.residues).per_residue;
        const auto rl = seq_log_prob(ref_logp, fx.loser.residues).per_residue;
        value = [&, kind, rw, rl](const PolicyParams& p) {
          const auto logp = forward(p, fx.structure);
          const auto tw = seq_log_prob(logp, fx.winner.residues).per_residue;
          const auto tl = seq_log_prob(logp, fx.loser.residues).per_residue;
          const PairBatchItem item{fx.winner.plddt, fx.loser.plddt, tw, tl, rw, rl};
          switch (kind) {
            case LossKind::Dpo: return dpo_loss(item, h);
            case LossKind::Rpl: return rpl_loss(item, h);
            case LossKind::Rcl: return rcl_loss(item, h);
            default: return residpo_loss(item, h).total;
          }
        };
        const std::vector<ScoredSequence> pool{fx.winner, fx.loser};
        const PairDataset one({fx.structure}, {pool},
                              {PreferencePair{fx.structure.id, 0, 1, SamplingStrategy::Relative, 0.0}});
        const size_t idx = 0;
        ReferenceCache cache(ref, one);
        analytic = pair_batch_loss(kind, h, theta, cache, one, std::span<const size_t>(&idx, 1)).grad;
      }

      Rng rng(derive_seed(opts.seed, "gradcheck_probe", {static_cast<std::uint64_t>(kind), c}));
      int taken = 0;
      while (taken < opts.probes) {
        const auto k = static_cast<size_t>(rng.below(PolicyParams::kCount));
        if (crosses_kink(theta, fx.structure, k, opts.rel_step)) {
          ++res.kink_skips;
          continue;
        }
        const double numeric = central_difference(value, theta, k, opts.rel_step);
        res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic.flat()[k], numeric));
        ++taken;
      }
      res.probes += taken;
      ++res.cases;
    }
    res.passed = res.max_rel_error < opts.tolerance;
    results.push_back(res);
  }
  return results;
}

}  // namespace residpo
