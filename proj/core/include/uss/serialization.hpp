#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "uss/eval.hpp"
#include "uss/trainer.hpp"

namespace uss {

// Ordered key/value pairs echoed into artifacts for provenance.
using Provenance = std::vector<std::pair<std::string, std::string>>;

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  Provenance config;
  std::string preset;
  double gamma = 64.0;
  double margin = 0.0;
  EmbeddingNet net;
  ThresholdParams thresholds;
  ClassProxyMatrix proxies;
  OptimizerState optimizer;
  std::string rng_state;
  int epochs_completed = 0;
};

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg, Provenance config);

/// JSON container. Doubles are written in shortest round-trip form, so a
/// save/load cycle reproduces every parameter bit for bit.
void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint);

/// Throws VersionMismatch for an unknown version, ParseError for malformed input.
Checkpoint load_checkpoint(std::istream& in);

/// Key order: config, samples, pairs, unified threshold, learned threshold,
/// per-identity threshold stats, TAR@FAR, k-fold, EER.
void write_eval_report_json(std::ostream& out, const EvalReport& report,
                            const Provenance& config);

/// `identity,optimal_threshold`, one row per identity.
void write_thresholds_csv(std::ostream& out, const ThresholdDistribution& thresholds);

/// `epoch,loss,lr,t,feasibility_margin`; t is empty when the preset has no threshold.
void write_training_log_csv(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace uss
