#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "residpo/trainer.hpp"

using namespace residpo;

namespace {

double l2_distance(const PolicyParams& a, const PolicyParams& b) {
  double sum = 0;
  for (size_t k = 0; k < PolicyParams::kCount; ++k) sum += std::pow(a.flat()[k] - b.flat()[k], 2);
  return std::sqrt(sum);
}

struct Fixture {
  Experiment exp = prepare_experiment(test::small_config(), 3);
  PairDataset pairs = training_pairs(exp, CellSpec{});
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

TrainConfig short_finetune(LossKind kind, int steps = 20) {
  auto cfg = test::small_config().finetune;
  cfg.loss = kind;
  cfg.total_steps = steps;
  cfg.master_seed = 3;
  return cfg;
}

}  // namespace

TEST(Schedule, WarmupAndCosine) {
  TrainConfig cfg;
  cfg.total_steps = 100;
  cfg.learning_rate = 1.0;
  EXPECT_NEAR(lr_at(1, cfg), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(lr_at(3, cfg), 1.0, 1e-15);
  cfg.total_steps = 2000;
  const int w = 60;
  const double last = 0.5 * (1 + std::cos(std::numbers::pi * (2000 - 1 - w) / (2000.0 - w)));
  EXPECT_NEAR(lr_at(1999, cfg), last, 1e-15);
  EXPECT_LT(lr_at(1999, cfg), 1e-3);
  EXPECT_THROW(lr_at(2000, cfg), ConfigError);
}

TEST(Schedule, ZeroWarmupStartsAtPeak) {
  TrainConfig cfg;
  cfg.total_steps = 10;
  cfg.warmup_fraction = 0.0;
  EXPECT_DOUBLE_EQ(lr_at(0, cfg), cfg.learning_rate);
}

TEST(Adam, ZeroGradientLeavesParamsAndDecaysMoments) {
  const auto p = PolicyParams::init(1);
  AdamState st;
  st.m.assign(PolicyParams::kCount, 0.5);
  st.v.assign(PolicyParams::kCount, 0.25);
  st.t = 3;
  const auto r = adam_step(p, Gradient{}, st, 0.0, {});
  EXPECT_EQ(r.params, p);
  EXPECT_LT(std::abs(r.moments.m[0]), 0.5);
  EXPECT_LT(r.moments.v[0], 0.25);
  EXPECT_EQ(r.moments.t, 4);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  const PolicyParams p;
  Gradient g;
  g.flat()[0] = 0.37;
  g.flat()[1] = -2.5;
  const double lr = 1e-3;
  const auto r = adam_step(p, g, AdamState{}, lr, {});
  EXPECT_NEAR(r.params.flat()[0], -lr, lr * 1e-8 / 0.37 + 1e-15);
  EXPECT_NEAR(r.params.flat()[1], lr, lr * 1e-8 / 2.5 + 1e-15);
  EXPECT_EQ(r.params.flat()[2], 0.0);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  Gradient g;
  g.flat()[5] = 0.8;
  auto r = adam_step(PolicyParams{}, g, AdamState{}, 1e-2, {});
  const double x1 = r.params.flat()[5];
  r = adam_step(r.params, g, r.moments, 1e-2, {});
  EXPECT_LT(x1, 0.0);
  EXPECT_LT(r.params.flat()[5], x1);
}

TEST(Adam, NonFiniteGradientRejected) {
  Gradient g;
  g.flat()[0] = std::nan("");
  EXPECT_THROW(adam_step(PolicyParams{}, g, AdamState{}, 1e-3, {}), NumericError);
}

TEST(Config, ValidateListsEveryField) {
  TrainConfig cfg;
  cfg.learning_rate = -1;
  cfg.batch_size = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("learning_rate"), std::string::npos);
    EXPECT_NE(what.find("batch_size"), std::string::npos);
  }
  EXPECT_NO_THROW(TrainConfig::paper_scale().validate());
  EXPECT_EQ(TrainConfig::paper_scale().learning_rate, 5e-7);
}

TEST(Pretrain, StartsNearUniformAndBeatsChance) {
  const auto& f = fixture();
  const auto& ref = f.exp.reference;
  const auto cfg = test::small_config().pretrain;
  auto fresh = cfg;
  fresh.master_seed = 3;
  const auto one = pretrain(fresh, f.exp.train_corpus, std::nullopt, 1);
  EXPECT_NEAR(one.log.front().loss, std::log(20.0), 0.05);
  EXPECT_GT(seq_recovery(ref.params, f.exp.val_corpus.structures, f.exp.val_corpus.natives), 5.0);
  EXPECT_LT(native_nll(ref.params, f.exp.train_corpus), std::log(20.0));
}

TEST(Pretrain, MovingAverageLossNonIncreasing) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto ds = make_dataset({}, seed);
    NativeCorpus corpus;
    for (size_t i = 0; i < ds.structures.size(); ++i) {
      corpus.structures.push_back(ds.structures[i]);
      corpus.natives.push_back(ds.natives[i]);
    }
    auto cfg = TrainConfig::pretrain_defaults();
    cfg.master_seed = seed;
    cfg.total_steps = 300;
    const auto log = pretrain(cfg, corpus).log;
    // Consecutive 10-step window means, allowing three standard errors of
    // minibatch noise for the difference of two windows.
    std::vector<double> ma, se;
    for (size_t t = 10; t <= log.size(); t += 10) {
      double sum = 0, sq = 0;
      for (size_t k = t - 10; k < t; ++k) sum += log[k].loss;
      const double mean = sum / 10;
      for (size_t k = t - 10; k < t; ++k) sq += std::pow(log[k].loss - mean, 2);
      ma.push_back(mean);
      se.push_back(std::sqrt(sq / 9 / 10));
    }
    for (size_t k = 1; k < ma.size(); ++k) {
      const double tol = 3 * std::hypot(se[k], se[k - 1]);
      EXPECT_LE(ma[k], ma[k - 1] + tol) << "seed " << seed << " window " << k;
    }
  }
}

TEST(Pretrain, ResumeIsBitExact) {
  const auto& f = fixture();
  auto cfg = test::small_config().pretrain;
  cfg.total_steps = 40;
  cfg.master_seed = 9;
  const auto full = pretrain(cfg, f.exp.train_corpus);
  const auto half = pretrain(cfg, f.exp.train_corpus, std::nullopt, 17);
  EXPECT_EQ(half.checkpoint.step, 17);
  const auto rest = pretrain(cfg, f.exp.train_corpus, half.checkpoint);
  EXPECT_EQ(rest.checkpoint, full.checkpoint);
}

TEST(Finetune, StepZeroIdentity) {
  const auto& f = fixture();
  const auto dpo = finetune(short_finetune(LossKind::Dpo, 5), f.pairs, f.exp.reference, std::nullopt, 1);
  EXPECT_NEAR(dpo.log.front().loss, std::log(2.0), 1e-6);
  const auto res = finetune(short_finetune(LossKind::Residpo, 5), f.pairs, f.exp.reference, std::nullopt, 1);
  const auto rpl = finetune(short_finetune(LossKind::Rpl, 5), f.pairs, f.exp.reference, std::nullopt, 1);
  EXPECT_NEAR(res.log.front().rcl, 0.0, 1e-12);
  EXPECT_EQ(res.log.front().loss, rpl.log.front().loss);
}

TEST(Finetune, DeterministicAndResumable) {
  const auto& f = fixture();
  const auto cfg = short_finetune(LossKind::Residpo, 12);
  const auto a = finetune(cfg, f.pairs, f.exp.reference);
  const auto b = finetune(cfg, f.pairs, f.exp.reference);
  EXPECT_EQ(a.checkpoint, b.checkpoint);
  EXPECT_EQ(a.log, b.log);
  const auto head = finetune(cfg, f.pairs, f.exp.reference, std::nullopt, 5);
  const auto tail = finetune(cfg, f.pairs, f.exp.reference, head.checkpoint);
  EXPECT_EQ(tail.checkpoint, a.checkpoint);
  EXPECT_EQ(tail.log.front().step, 5);
}

// The realized-token constraint term is minimized by raising pi(y_w), not by
// staying at the reference, so a dominant weight drives that term down and
// moves the parameters further from the reference than a small weight does.
TEST(Finetune, LargeConstraintWeightDrivesConstraintTerm) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto exp = prepare_experiment(test::small_config(), seed);
    const auto data = training_pairs(exp, CellSpec{});
    auto cfg = short_finetune(LossKind::Residpo, 30);
    cfg.learning_rate = 1e-3;
    cfg.master_seed = seed;
    cfg.hyper.gamma = 0.0;
    cfg.hyper.beta_thresh = 1.0;
    const auto loose = finetune(cfg, data, exp.reference);
    cfg.hyper.lambda = 1e3;
    const auto tight = finetune(cfg, data, exp.reference);
    EXPECT_LT(tight.log.back().rcl, loose.log.back().rcl) << "seed " << seed;
    EXPECT_GT(l2_distance(tight.checkpoint.params, exp.reference.params),
              l2_distance(loose.checkpoint.params, exp.reference.params))
        << "seed " << seed;
  }
}

TEST(Finetune, RejectsBadInputs) {
  const auto& f = fixture();
  EXPECT_THROW(finetune(short_finetune(LossKind::Pretrain), f.pairs, f.exp.reference), ConfigError);
  EXPECT_THROW(finetune(short_finetune(LossKind::Dpo), PairDataset{}, f.exp.reference), DataError);
  auto bad = f.pairs.pairs();
  bad.front().loser_index = 99;
  EXPECT_THROW(PairDataset(f.pairs.structures(), f.pairs.pools(), bad), DataError);
}

TEST(Finetune, MetricTailBounded) {
  const auto& f = fixture();
  const auto r = finetune(short_finetune(LossKind::Dpo, 60), f.pairs, f.exp.reference);
  EXPECT_EQ(r.checkpoint.metric_tail.size(), Checkpoint::kTailLength);
  EXPECT_EQ(r.checkpoint.metric_tail.back(), r.log.back());
}
