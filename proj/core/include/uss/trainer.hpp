#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "uss/model.hpp"
#include "uss/objective.hpp"
#include "uss/optimizer.hpp"
#include "uss/pairing.hpp"

namespace uss {

enum class ProxyInit { kClassMean, kRandom };

struct TrainConfig {
  SyntheticConfig data;
  int holdout_per_identity = 4;
  std::vector<int> layer_sizes{32, 64, 16};
  ObjectiveConfig objective;
  // Desk-scale default. The 0.1 step schedule collapses this small net at gamma = 64.
  LrSchedule schedule = WarmupPoly{0.003, 5.0, 2.0};
  SgdConfig sgd;
  int epochs = 28;
  int batch_identities = 32;
  int steps_per_epoch = 30;  // 0 = ceil(train samples / (2 * batch_identities))
  double threshold_lr_scale = 10.0;
  ProxyInit proxy_init = ProxyInit::kClassMean;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> t;  // unified t, or mean t_i for per-identity thresholds
  double feasibility_margin = 0.0;  // min positive - max negative on the probe batch

  bool operator==(const EpochLog&) const = default;
};

struct TrainState {
  EmbeddingNet net;
  ThresholdParams thresholds;
  ClassProxyMatrix proxies;  // empty unless the preset uses proxies
  OptimizerState optimizer;
  std::mt19937_64 rng;
  int epochs_completed = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochLog> log;
};

/// splitmix64-based stream derivation so every consumer of the run seed gets
/// an independent, reproducible generator.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Fresh state: He-initialized network, b = 0, proxies per `proxy_init`.
TrainState initial_state(const TrainConfig& cfg, const IdentityDataset& train_set);

/// One SGD step on one pair batch drawn from `state.rng`. Returns the batch loss.
double train_step(TrainState& state, const TrainConfig& cfg, const IdentityDataset& train_set,
                  double lr);

/// min(diag) - max(off-diagonal) of the probe batch's similarity matrix under `net`.
double feasibility_margin(const EmbeddingNet& net, const PairBatch& probe);

/// Held-out probe batch used for the per-epoch feasibility margin.
PairBatch probe_batch(const TrainConfig& cfg, const IdentityDataset& holdout);

int resolved_steps_per_epoch(const TrainConfig& cfg, const IdentityDataset& train_set);

/// Full run on pre-split data.
TrainResult train(const TrainConfig& cfg, const IdentityDataset& train_set,
                  const IdentityDataset& holdout);

/// Generates cfg.data, splits off the holdout, trains.
TrainResult train(const TrainConfig& cfg);

}  // namespace uss
