#include <benchmark/benchmark.h>

#include "residpo/evalx.hpp"
#include "residpo/oracle.hpp"
#include "residpo/pairs.hpp"
#include "residpo/policy.hpp"

using namespace residpo;

namespace {

StructureInstance structure(int length) { return gen_structures(1, {length, length}, 7).front(); }

void BM_Forward(benchmark::State& state) {
  const auto params = PolicyParams::init(1);
  const auto s = structure(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(24)->Arg(64)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  const auto params = PolicyParams::init(1);
  const auto s = structure(static_cast<int>(state.range(0)));
  const auto y = sample(params, s, {}, 3);
  const LogProbLoss nll = [&](const PerResidueLogProbs& logp, LogProbAdjoint& adj) {
    double total = 0;
    for (int i = 0; i < logp.length; ++i) {
      total -= logp.at(i, y[static_cast<size_t>(i)]);
      adj.at(i, y[static_cast<size_t>(i)]) = -1.0;
    }
    return total;
  };
  for (auto _ : state) benchmark::DoNotOptimize(grad_loss(params, s, nll));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(24)->Arg(64)->Arg(512);

void BM_OracleScore(benchmark::State& state) {
  const auto map = HiddenTargetMap::generate(1);
  const auto s = structure(static_cast<int>(state.range(0)));
  const auto y = gen_native(map, s, 2);
  for (auto _ : state) benchmark::DoNotOptimize(score(map, s, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OracleScore)->Arg(24)->Arg(64)->Arg(512);

void BM_ResidpoPairLoss(benchmark::State& state) {
  const auto n = static_cast<size_t>(state.range(0));
  Rng rng(4);
  std::vector<double> pw(n), pl(n), tw(n), tl(n), rw(n), rl(n);
  for (size_t i = 0; i < n; ++i) {
    pw[i] = 100 * rng.uniform();
    pl[i] = 100 * rng.uniform();
    tw[i] = -3 * rng.uniform();
    tl[i] = -3 * rng.uniform();
    rw[i] = -3 * rng.uniform();
    rl[i] = -3 * rng.uniform();
  }
  const PairBatchItem item{pw, pl, tw, tl, rw, rl};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pair_loss(LossKind::Residpo, item, {}));
}
BENCHMARK(BM_ResidpoPairLoss)->Arg(64)->Arg(512);

void BM_PairConstruction(benchmark::State& state) {
  const auto map = HiddenTargetMap::generate(1);
  const auto structures = gen_structures(static_cast<int>(state.range(0)), {24, 64}, 5);
  const auto pools = sample_and_score(PolicyParams::init(2), map, structures, 8, 1.0, {}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(build_pairs(pools, SamplingStrategy::Relative, {}, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PairConstruction)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
