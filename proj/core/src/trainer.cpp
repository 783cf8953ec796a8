#include "uss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uss/error.hpp"

namespace uss {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kProbeStream = 3;
constexpr std::uint64_t kProxyStream = 4;

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.values().begin(), top.values().end(), out.values().begin());
  std::copy(bottom.values().begin(), bottom.values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(top.values().size()));
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t i = 0; i < count; ++i) {
    std::copy(m.row(begin + i).begin(), m.row(begin + i).end(), out.row(i).begin());
  }
  return out;
}

std::optional<double> current_t(const TrainState& state, const TrainConfig& cfg) {
  const double gamma = cfg.objective.gamma;
  switch (cfg.objective.threshold_use()) {
    case ThresholdUse::kUnified: return state.thresholds.t(gamma);
    case ThresholdUse::kPerIdentity: {
      const auto t = state.thresholds.t_vec(gamma);
      return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    }
    case ThresholdUse::kNone: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

void TrainConfig::validate() const {
  objective.validate();
  if (layer_sizes.size() < 2) throw Error(ErrorCode::kInvalidConfig, "need >= 2 layer sizes");
  if (layer_sizes.front() != data.dim) {
    throw Error(ErrorCode::kShapeMismatch, "first layer size must equal the data dimension");
  }
  if (epochs < 0) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 0");
  if (batch_identities < 2) throw Error(ErrorCode::kInvalidConfig, "batch needs >= 2 identities");
  if (steps_per_epoch < 0) throw Error(ErrorCode::kInvalidConfig, "steps_per_epoch must be >= 0");
  if (!(threshold_lr_scale >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "threshold_lr_scale must be >= 0");
  }
  if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0) || !(sgd.weight_decay >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "momentum in [0, 1) and weight_decay >= 0 required");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainState initial_state(const TrainConfig& cfg, const IdentityDataset& train_set) {
  cfg.validate();
  if (train_set.dim() != cfg.layer_sizes.front()) {
    throw Error(ErrorCode::kShapeMismatch, "training data dimension differs from network input");
  }
  TrainState state;
  state.net = EmbeddingNet::he_initialized(cfg.layer_sizes, derive_seed(cfg.seed, kInitStream));
  state.rng.seed(derive_seed(cfg.seed, kBatchStream));
  switch (cfg.objective.threshold_use()) {
    case ThresholdUse::kPerIdentity:
      state.thresholds =
          ThresholdParams::per_identity(static_cast<std::size_t>(train_set.num_identities));
      break;
    default: state.thresholds = ThresholdParams::unified(0.0); break;
  }
  if (cfg.objective.uses_proxies()) {
    if (cfg.proxy_init == ProxyInit::kClassMean) {
      const Matrix embeddings = state.net.forward(train_set.features).outputs;
      state.proxies = ClassProxyMatrix::from_class_means(embeddings, train_set.labels,
                                                         train_set.num_identities);
    } else {
      state.proxies = ClassProxyMatrix::random(train_set.num_identities, cfg.layer_sizes.back(),
                                               derive_seed(cfg.seed, kProxyStream));
    }
  }
  return state;
}

double train_step(TrainState& state, const TrainConfig& cfg, const IdentityDataset& train_set,
                  double lr) {
  const PairBatch batch = make_pair_batch(train_set, cfg.batch_identities, state.rng);
  const std::size_t p = batch.size();
  const ForwardPass pass = state.net.forward(stack_rows(batch.anchors, batch.galleries));
  const Matrix anchors = slice_rows(pass.outputs, 0, p);
  const Matrix galleries = slice_rows(pass.outputs, p, p);

  const ClassProxyMatrix* proxies = cfg.objective.uses_proxies() ? &state.proxies : nullptr;
  const BatchLossOutput loss = evaluate_objective(cfg.objective, anchors, galleries,
                                                  batch.identities, state.thresholds, proxies);
  const NetGradients grads =
      state.net.backward(pass, stack_rows(loss.d_anchors, loss.d_galleries));

  // Slots: 2l weights, 2l+1 bias, then proxies, then thresholds.
  auto& layers = state.net.mutable_layers();
  std::size_t slot = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weights.values();
    sgd_step(w, grads.weights[l].values(), state.optimizer.slot(slot++, w.size()), lr, cfg.sgd);
    auto& b = layers[l].bias;
    sgd_step(b, grads.biases[l], state.optimizer.slot(slot++, b.size()), lr, cfg.sgd);
  }
  if (proxies != nullptr) {
    auto w = state.proxies.weights().values();
    sgd_step(w, loss.d_proxies.values(), state.optimizer.slot(slot, w.size()), lr, cfg.sgd);
    // A zero step leaves the rows untouched; renormalizing would still move bits.
    if (lr != 0.0) state.proxies.normalize();
  }
  ++slot;
  const double threshold_lr = lr * cfg.threshold_lr_scale;
  switch (cfg.objective.threshold_use()) {
    case ThresholdUse::kUnified: {
      std::span<double> b(&state.thresholds.b(), 1);
      const double grad = loss.d_b;
      sgd_step(b, std::span<const double>(&grad, 1), state.optimizer.slot(slot, 1), threshold_lr,
               cfg.sgd, /*apply_weight_decay=*/false);
      break;
    }
    case ThresholdUse::kPerIdentity: {
      auto& b = state.thresholds.b_vec();
      sgd_step(b, loss.d_b_vec, state.optimizer.slot(slot, b.size()), threshold_lr, cfg.sgd,
               /*apply_weight_decay=*/false);
      break;
    }
    case ThresholdUse::kNone: break;
  }
  return loss.value;
}

double feasibility_margin(const EmbeddingNet& net, const PairBatch& probe) {
  const Matrix sims = similarity_matrix(net.forward(probe.anchors).outputs,
                                        net.forward(probe.galleries).outputs);
  double min_pos = std::numeric_limits<double>::infinity();
  double max_neg = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sims.rows(); ++i) {
    for (std::size_t j = 0; j < sims.cols(); ++j) {
      if (i == j) {
        min_pos = std::min(min_pos, sims(i, j));
      } else {
        max_neg = std::max(max_neg, sims(i, j));
      }
    }
  }
  return min_pos - max_neg;
}

PairBatch probe_batch(const TrainConfig& cfg, const IdentityDataset& holdout) {
  const int p = std::min(cfg.batch_identities, holdout.num_identities);
  return make_pair_batch(holdout, p, derive_seed(cfg.seed, kProbeStream));
}

int resolved_steps_per_epoch(const TrainConfig& cfg, const IdentityDataset& train_set) {
  if (cfg.steps_per_epoch > 0) return cfg.steps_per_epoch;
  const auto per_batch = static_cast<std::size_t>(2 * cfg.batch_identities);
  return static_cast<int>(std::max<std::size_t>(1, (train_set.size() + per_batch - 1) / per_batch));
}

TrainResult train(const TrainConfig& cfg, const IdentityDataset& train_set,
                  const IdentityDataset& holdout) {
  train_set.validate();
  holdout.validate();
  TrainResult result;
  result.state = initial_state(cfg, train_set);
  const PairBatch probe = probe_batch(cfg, holdout);
  const int steps = resolved_steps_per_epoch(cfg, train_set);
  const double total = static_cast<double>(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    CompensatedSum loss_sum;
    double lr = 0.0;
    for (int s = 0; s < steps; ++s) {
      const double progress = epoch + static_cast<double>(s) / steps;
      lr = lr_at(cfg.schedule, progress, total);
      loss_sum.add(train_step(result.state, cfg, train_set, lr));
    }
    result.state.epochs_completed = epoch + 1;
    EpochLog row;
    row.epoch = epoch + 1;
    row.loss = loss_sum.value() / steps;
    row.lr = lr;
    row.t = current_t(result.state, cfg);
    row.feasibility_margin = feasibility_margin(result.state.net, probe);
    result.log.push_back(row);
  }
  return result;
}

TrainResult train(const TrainConfig& cfg) {
  SyntheticConfig data = cfg.data;
  const DatasetSplit split = split_holdout(generate_synthetic(data), cfg.holdout_per_identity);
  return train(cfg, split.train, split.holdout);
}

}  // namespace uss
