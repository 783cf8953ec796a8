#include "uss/s2s_losses.hpp"

#include <cmath>
#include <string>

#include "uss/error.hpp"

namespace uss {

void LossConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::kInvalidConfig, "gamma must be positive and finite");
  }
  if (!(margin >= 0.0 && margin < 2.0)) {
    throw Error(ErrorCode::kInvalidConfig, "margin must lie in [0, 2)");
  }
}

ThresholdParams ThresholdParams::unified(double b) {
  ThresholdParams p;
  p.mode_ = Mode::kUnified;
  p.b_ = b;
  return p;
}

ThresholdParams ThresholdParams::per_identity(std::size_t identities, double b) {
  return per_identity(std::vector<double>(identities, b));
}

ThresholdParams ThresholdParams::per_identity(std::vector<double> b) {
  ThresholdParams p;
  p.mode_ = Mode::kPerIdentity;
  p.b_vec_ = std::move(b);
  return p;
}

std::vector<double> ThresholdParams::t_vec(double gamma) const {
  std::vector<double> t(b_vec_.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = b_vec_[i] / gamma;
  return t;
}

void SimilarityRow::validate() const {
  constexpr double kSlack = 1e-12;
  if (negs.empty()) throw Error(ErrorCode::kInvalidConfig, "similarity row has no negatives");
  auto in_range = [](double v) { return std::isfinite(v) && v >= -1.0 - kSlack && v <= 1.0 + kSlack; };
  if (!in_range(pos)) throw Error(ErrorCode::kInvalidConfig, "positive similarity out of range");
  for (double v : negs) {
    if (!in_range(v)) throw Error(ErrorCode::kInvalidConfig, "negative similarity out of range");
  }
}

SimilarityRow row_of(const Matrix& similarities, std::size_t i) {
  SimilarityRow row;
  row.pos = similarities(i, i);
  row.negs.reserve(similarities.cols() - 1);
  for (std::size_t j = 0; j < similarities.cols(); ++j) {
    if (j != i) row.negs.push_back(similarities(i, j));
  }
  return row;
}

LossOutput naive_loss(const SimilarityRow& row, const LossConfig& cfg) {
  row.validate();
  cfg.validate();
  const double others = static_cast<double>(row.negs.size());
  CompensatedSum neg_sum;
  for (double g : row.negs) neg_sum.add(g);

  LossOutput out;
  out.value = -cfg.gamma * row.pos + cfg.gamma / others * neg_sum.value();
  out.d_pos = -cfg.gamma;
  out.d_negs.assign(row.negs.size(), cfg.gamma / others);
  return out;
}

double naive_loss_full(std::span<const double> anchor, int anchor_label,
                       const IdentityDataset& ds, const LossConfig& cfg,
                       std::optional<std::size_t> self_index) {
  cfg.validate();
  const SimilarityPartition part = partition_similarities(anchor, anchor_label, ds, self_index);
  if (part.positives.empty() || part.negatives.empty()) {
    throw Error(ErrorCode::kInsufficientData,
                "the full naive loss needs at least one positive and one negative");
  }
  CompensatedSum pos_sum;
  CompensatedSum neg_sum;
  for (double g : part.positives) pos_sum.add(g);
  for (double g : part.negatives) neg_sum.add(g);
  return -cfg.gamma / static_cast<double>(part.positives.size()) * pos_sum.value() +
         cfg.gamma / static_cast<double>(part.negatives.size()) * neg_sum.value();
}

namespace {

// Shared body of the unified and per-identity threshold losses. `pos_b` is the
// offset on the positive term, `neg_b(j)` the offset on negative j. Both
// callers go through here so that tied per-identity offsets reproduce the
// unified loss exactly.
struct TermWeights {
  double pos = 0.0;
  std::vector<double> negs;
};

template <typename NegOffset>
LossOutput threshold_loss(const SimilarityRow& row, double pos_b, NegOffset neg_b,
                          const LossConfig& cfg, TermWeights* weights = nullptr) {
  LossOutput out;
  const double pos_arg = -cfg.gamma * (row.pos - cfg.margin) + pos_b;
  CompensatedSum value;
  CompensatedSum d_b;
  value.add(softplus(pos_arg));
  const double pos_weight = sigmoid(pos_arg);
  out.d_pos = -cfg.gamma * pos_weight;
  d_b.add(pos_weight);
  out.d_negs.resize(row.negs.size());
  for (std::size_t j = 0; j < row.negs.size(); ++j) {
    const double arg = cfg.gamma * row.negs[j] - neg_b(j);
    value.add(softplus(arg));
    const double w = sigmoid(arg);
    out.d_negs[j] = cfg.gamma * w;
    d_b.add(-w);
  }
  out.value = value.value();
  out.d_b = d_b.value();
  if (weights != nullptr) {
    weights->pos = pos_weight;
    weights->negs.resize(row.negs.size());
    for (std::size_t j = 0; j < row.negs.size(); ++j) {
      weights->negs[j] = sigmoid(cfg.gamma * row.negs[j] - neg_b(j));
    }
  }
  return out;
}

}  // namespace

LossOutput uss_loss(const SimilarityRow& row, const ThresholdParams& thr, const LossConfig& cfg) {
  row.validate();
  cfg.validate();
  if (thr.mode() != ThresholdParams::Mode::kUnified) {
    throw Error(ErrorCode::kInvalidConfig, "uss_loss needs a unified threshold");
  }
  const double b = thr.b();
  return threshold_loss(row, b, [b](std::size_t) { return b; }, cfg);
}

StationaryThreshold stationary_b(double identities, double gamma) {
  if (!(identities >= 2.0) || !(gamma > 0.0) || !std::isfinite(identities) ||
      !std::isfinite(gamma)) {
    throw Error(ErrorCode::kInvalidConfig, "stationary_b needs N >= 2 and gamma > 0");
  }
  const double a = (identities - 2.0) * std::exp(-gamma);
  StationaryThreshold out;
  out.b = std::log((a + std::sqrt(a * a + 4.0 * (identities - 1.0))) / 2.0);
  out.t = out.b / gamma;
  out.in_range = out.t > -1.0 && out.t < 1.0;
  return out;
}

bool stationary_in_range_condition(double identities, double gamma) {
  // N < (e^{2g} + 3) / 2, written as 2N - 3 < e^{2g} to stay finite longer.
  return 2.0 * identities - 3.0 < std::exp(2.0 * gamma);
}

LossOutput s2s_softmax_loss(const SimilarityRow& row, const LossConfig& cfg) {
  row.validate();
  cfg.validate();
  std::vector<double> logits;
  logits.reserve(row.negs.size() + 1);
  logits.push_back(cfg.gamma * (row.pos - cfg.margin));
  for (double g : row.negs) logits.push_back(cfg.gamma * g);
  const double lse = log_sum_exp(logits);

  LossOutput out;
  out.value = lse - logits[0];
  out.d_pos = cfg.gamma * (std::exp(logits[0] - lse) - 1.0);
  out.d_negs.resize(row.negs.size());
  for (std::size_t j = 0; j < row.negs.size(); ++j) {
    out.d_negs[j] = cfg.gamma * std::exp(logits[j + 1] - lse);
  }
  return out;
}

LossOutput s2s_bce_loss(const SimilarityRow& row, int anchor_id, std::span<const int> neg_ids,
                        const ThresholdParams& thr, const LossConfig& cfg) {
  row.validate();
  cfg.validate();
  if (thr.mode() != ThresholdParams::Mode::kPerIdentity) {
    throw Error(ErrorCode::kInvalidConfig, "s2s_bce_loss needs per-identity thresholds");
  }
  const auto& b = thr.b_vec();
  const auto valid = [&b](int id) { return id >= 0 && static_cast<std::size_t>(id) < b.size(); };
  if (neg_ids.size() != row.negs.size()) {
    throw Error(ErrorCode::kIdMismatch, "neg_ids and negatives differ in length");
  }
  if (!valid(anchor_id)) throw Error(ErrorCode::kIdMismatch, "anchor id out of range");
  for (int id : neg_ids) {
    if (!valid(id)) throw Error(ErrorCode::kIdMismatch, "negative id out of range");
  }

  TermWeights weights;
  LossOutput out = threshold_loss(
      row, b[static_cast<std::size_t>(anchor_id)],
      [&](std::size_t j) { return b[static_cast<std::size_t>(neg_ids[j])]; }, cfg, &weights);

  out.d_b = 0.0;
  out.d_b_vec.assign(b.size(), 0.0);
  out.d_b_vec[static_cast<std::size_t>(anchor_id)] += weights.pos;
  for (std::size_t j = 0; j < neg_ids.size(); ++j) {
    out.d_b_vec[static_cast<std::size_t>(neg_ids[j])] -= weights.negs[j];
  }
  return out;
}

}  // namespace uss
