#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "residpo/gradcheck.hpp"
#include "residpo/policy.hpp"

using namespace residpo;

TEST(Policy, ZeroParamsGiveUniformRows) {
  const PolicyParams zero;
  const auto logp = forward(zero, test::random_structure(12, 1));
  for (double v : logp.values) EXPECT_NEAR(v, std::log(1.0 / 20.0), 1e-12);
  EXPECT_NEAR(std::log(1.0 / 20.0), -2.9957, 1e-4);
}

TEST(Policy, RowsNormalize) {
  const auto p = PolicyParams::init(3);
  const auto logp = forward(p, test::random_structure(30, 3));
  for (int i = 0; i < logp.length; ++i) {
    double sum = 0;
    for (double v : logp.row(i)) sum += std::exp(v);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Policy, NeighbourMeanOfSingleResidue) {
  StructureInstance s{"one", {FeatureVector{1, 2, 3, 4, 5, 6, 7, 8}}};
  const auto g = aggregate_inputs(s);
  ASSERT_EQ(g.size(), 16u);
  for (int d = 0; d < 8; ++d) {
    EXPECT_EQ(g[static_cast<size_t>(d)], d + 1.0);
    EXPECT_EQ(g[static_cast<size_t>(d + 8)], d + 1.0);
  }
}

TEST(Policy, InitBiasesZero) {
  const auto p = PolicyParams::init(5);
  for (double b : p.b1()) EXPECT_EQ(b, 0.0);
  for (double b : p.b2()) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(PolicyParams::init(5), p);
  EXPECT_NE(PolicyParams::init(6), p);
}

TEST(SeqLogProb, ZeroParamsTwoResidues) {
  StructureInstance s{"two", std::vector<FeatureVector>(2)};
  const auto lp = seq_log_prob(PolicyParams{}, s, parse_sequence("AK"));
  EXPECT_NEAR(lp.total, 2 * std::log(1.0 / 20.0), 1e-12);
  EXPECT_NEAR(lp.total, -5.9915, 1e-4);
}

TEST(SeqLogProb, TotalIsSumOfResidues) {
  const auto p = PolicyParams::init(7);
  const auto s = test::random_structure(25, 7);
  const auto y = sample(p, s, {}, 1);
  const auto lp = seq_log_prob(p, s, y);
  double sum = 0;
  for (double v : lp.per_residue) sum += v;
  EXPECT_NEAR(lp.total, sum, 1e-9);
  EXPECT_THROW(seq_log_prob(p, s, parse_sequence("AC")), DataError);
}

TEST(SeqLogProb, AllLengthTwoSequencesSumToOne) {
  const auto p = PolicyParams::init(9, 0.5);
  StructureInstance s{"two", {FeatureVector{0.3, -1, 2, 0, 1, 1, -0.5, 0.2}, FeatureVector{1, 1, 1, -1, 0, 2, 0, 0}}};
  const auto logp = forward(p, s);
  double total = 0;
  for (int a = 0; a < 20; ++a) {
    for (int b = 0; b < 20; ++b) total += std::exp(seq_log_prob(logp, {AminoAcid(a), AminoAcid(b)}).total);
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Sample, FixedPositionsCopied) {
  const auto p = PolicyParams::init(1);
  const auto s = test::random_structure(10, 1);
  SamplingOptions opts;
  opts.fixed[0] = AminoAcid::from_code('K');
  for (double t : {0.01, 1.0, 10.0}) {
    opts.temperature = t;
    for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(sample(p, s, opts, seed)[0].code(), 'K');
  }
  opts.fixed[10] = AminoAcid(0);
  EXPECT_THROW(sample(p, s, opts, 0), ConfigError);
}

TEST(Sample, ColdLimitIsAllowedArgmax) {
  const auto p = PolicyParams::init(2, 1.0);
  const auto s = test::random_structure(20, 2);
  const auto logp = forward(p, s);
  SamplingOptions opts;
  opts.temperature = 1e-6;
  EXPECT_EQ(sample(logp, opts, 4), argmax_sequence(logp));

  const auto am = argmax_sequence(logp);
  opts.banned = {am[0]};
  const auto cold = sample(logp, opts, 4);
  EXPECT_NE(cold[0], am[0]);
  int best = -1;
  for (int a = 0; a < 20; ++a) {
    if (AminoAcid(a) == am[0]) continue;
    if (best < 0 || logp.at(0, AminoAcid(a)) > logp.at(0, AminoAcid(best))) best = a;
  }
  EXPECT_EQ(cold[0], AminoAcid(best));
}

TEST(Sample, BannedResidueFrequencies) {
  StructureInstance s{"one", std::vector<FeatureVector>(1)};
  const auto logp = forward(PolicyParams{}, s);
  SamplingOptions opts;
  opts.banned = {AminoAcid::from_code('C')};
  const int n = 10000;
  std::vector<int> counts(20, 0);
  for (int k = 0; k < n; ++k) ++counts[static_cast<size_t>(sample(logp, opts, static_cast<std::uint64_t>(k))[0].index())];
  const double p = 1.0 / 19.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int a = 0; a < 20; ++a) {
    if (AminoAcid(a).code() == 'C') {
      EXPECT_EQ(counts[static_cast<size_t>(a)], 0);
    } else {
      EXPECT_NEAR(counts[static_cast<size_t>(a)], n * p, 5 * sigma) << AminoAcid(a).code();
    }
  }
}

TEST(Sample, AllBannedRejected) {
  SamplingOptions opts;
  for (int a = 0; a < 20; ++a) opts.banned.emplace_back(a);
  EXPECT_THROW(sample(forward(PolicyParams{}, test::random_structure(8, 1)), opts, 0), ConfigError);
}

TEST(Gradient, ConstantLossHasZeroGradient) {
  const auto p = PolicyParams::init(3);
  const auto g = grad_loss(p, test::random_structure(10, 3), [](const PerResidueLogProbs&, LogProbAdjoint&) {
    return 0.0;
  });
  for (double v : g.grad.flat()) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, LogLikelihoodMatchesFiniteDifferences) {
  const auto p = PolicyParams::init(4, 0.5);
  const auto s = test::random_structure(14, 4);
  const auto y = sample(p, s, {}, 9);
  auto loss = [&](const PerResidueLogProbs& logp, LogProbAdjoint& adj) {
    double total = 0;
    for (int i = 0; i < logp.length; ++i) {
      total -= logp.at(i, y[static_cast<size_t>(i)]);
      adj.at(i, y[static_cast<size_t>(i)]) -= 1.0;
    }
    return total;
  };
  const auto g = grad_loss(p, s, loss);
  auto f = [&](const PolicyParams& q) { return -seq_log_prob(q, s, y).total; };
  Rng rng(2);
  double worst = 0;
  for (int probe = 0; probe < 64; ++probe) {
    const auto k = static_cast<size_t>(rng.below(PolicyParams::kCount));
    const double num = central_difference(f, p, k);
    worst = std::max(worst, relative_error(g.grad.flat()[k], num));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradient, OutputBiasIsOneHotMinusSoftmax) {
  const auto p = PolicyParams::init(5, 0.4);
  const auto s = test::random_structure(9, 5);
  const auto y = sample(p, s, {}, 2);
  const auto logp = forward(p, s);
  const auto g = grad_loss(p, s, [&](const PerResidueLogProbs& lp, LogProbAdjoint& adj) {
    double total = 0;
    for (int i = 0; i < lp.length; ++i) {
      total += lp.at(i, y[static_cast<size_t>(i)]);
      adj.at(i, y[static_cast<size_t>(i)]) += 1.0;
    }
    return total;
  });
  for (int a = 0; a < 20; ++a) {
    double want = 0;
    for (int i = 0; i < s.length(); ++i) {
      want += (y[static_cast<size_t>(i)] == AminoAcid(a) ? 1.0 : 0.0) - std::exp(logp.at(i, AminoAcid(a)));
    }
    EXPECT_NEAR(g.grad.b2()[static_cast<size_t>(a)], want, 1e-10);
  }
}

TEST(Gradient, NonFiniteAdjointNamesTensor) {
  const auto p = PolicyParams::init(5);
  const auto s = test::random_structure(9, 5);
  try {
    grad_loss(p, s, [](const PerResidueLogProbs&, LogProbAdjoint& adj) {
      adj.values[3] = std::nan("");
      return 0.0;
    });
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("dlogp"), std::string::npos);
  }
}
