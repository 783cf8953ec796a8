#include <random>

#include <benchmark/benchmark.h>

#include "uss/eval.hpp"
#include "uss/s2c_losses.hpp"
#include "uss/s2s_losses.hpp"
#include "uss/trainer.hpp"

namespace {

using namespace uss;

SimilarityRow random_row(int identities) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SimilarityRow row{u(rng), std::vector<double>(static_cast<std::size_t>(identities - 1))};
  for (double& x : row.negs) x = u(rng);
  return row;
}

void BM_UssLoss(benchmark::State& state) {
  const SimilarityRow row = random_row(static_cast<int>(state.range(0)));
  const auto thr = ThresholdParams::unified(10.0);
  const LossConfig cfg{64.0, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(uss_loss(row, thr, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UssLoss)->RangeMultiplier(8)->Range(8, 4096);

void BM_SoftmaxLoss(benchmark::State& state) {
  const SimilarityRow row = random_row(static_cast<int>(state.range(0)));
  const LossConfig cfg{64.0, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(s2s_softmax_loss(row, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SoftmaxLoss)->RangeMultiplier(8)->Range(8, 4096);

void BM_CosMarginLoss(benchmark::State& state) {
  const auto identities = static_cast<int>(state.range(0));
  const ClassProxyMatrix proxies = ClassProxyMatrix::random(identities, 16, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Vector x(16);
  for (double& v : x) v = n(rng);
  x = l2_normalize(x);
  const S2CConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(s2c_loss(x, proxies, 0, cfg));
}
BENCHMARK(BM_CosMarginLoss)->RangeMultiplier(8)->Range(8, 4096);

void BM_TrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.objective.preset = static_cast<Preset>(state.range(0));
  const DatasetSplit split = split_holdout(generate_synthetic(cfg.data), cfg.holdout_per_identity);
  TrainState train_state = initial_state(cfg, split.train);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(train_state, cfg, split.train, 1e-4));
  state.SetLabel(std::string(preset_name(cfg.objective.preset)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Preset::kUssMargin))
    ->Arg(static_cast<int>(Preset::kSoftmax))
    ->Arg(static_cast<int>(Preset::kCosMargin))
    ->Arg(static_cast<int>(Preset::kUniTS));

void BM_Eer(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScoreSet s;
  for (int i = 0; i < state.range(0); ++i) (i % 50 == 0 ? s.positives : s.negatives).push_back(u(rng));
  for (auto _ : state) benchmark::DoNotOptimize(eer(s));
}
BENCHMARK(BM_Eer)->Range(1 << 10, 1 << 16);

}  // namespace

BENCHMARK_MAIN();
