#include "uss/s2c_losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "uss/error.hpp"

namespace uss {

void S2CConfig::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidConfig, "s2c scale must be positive");
  }
  if (!(margin >= 0.0) || !std::isfinite(margin)) {
    throw Error(ErrorCode::kInvalidConfig, "s2c margin must be non-negative");
  }
  if (kind == MarginKind::kAngular && !(margin < std::numbers::pi / 2.0)) {
    throw Error(ErrorCode::kInvalidConfig, "angular margin must lie in [0, pi/2)");
  }
}

ClassProxyMatrix::ClassProxyMatrix(Matrix rows) : weights_(std::move(rows)) { normalize(); }

ClassProxyMatrix ClassProxyMatrix::from_class_means(const Matrix& features,
                                                    std::span<const int> labels, int identities) {
  if (features.rows() != labels.size() || identities < 1) {
    throw Error(ErrorCode::kShapeMismatch, "features and labels differ in count");
  }
  Matrix sums(static_cast<std::size_t>(identities), features.cols());
  std::vector<int> counts(static_cast<std::size_t>(identities), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto id = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || id >= counts.size()) {
      throw Error(ErrorCode::kIdMismatch, "label out of range for proxy init");
    }
    ++counts[id];
    auto dst = sums.row(id);
    const auto src = features.row(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  for (std::size_t id = 0; id < counts.size(); ++id) {
    if (counts[id] == 0) {
      throw Error(ErrorCode::kInsufficientData,
                  "identity " + std::to_string(id) + " has no features for proxy init");
    }
  }
  return ClassProxyMatrix(std::move(sums));
}

ClassProxyMatrix ClassProxyMatrix::random(int identities, int dim, std::uint64_t seed) {
  if (identities < 1 || dim < 1) throw Error(ErrorCode::kInvalidConfig, "empty proxy matrix");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w(static_cast<std::size_t>(identities), static_cast<std::size_t>(dim));
  for (double& v : w.values()) v = normal(rng);
  return ClassProxyMatrix(std::move(w));
}

void ClassProxyMatrix::normalize() {
  for (std::size_t i = 0; i < weights_.rows(); ++i) {
    const Vector unit = l2_normalize(weights_.row(i));
    std::copy(unit.begin(), unit.end(), weights_.row(i).begin());
  }
}

double ClassProxyMatrix::max_norm_deviation() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < weights_.rows(); ++i) {
    worst = std::max(worst, std::abs(l2_norm(weights_.row(i)) - 1.0));
  }
  return worst;
}

S2CLogits s2c_logits(std::span<const double> x, const ClassProxyMatrix& proxies, int label,
                     const S2CConfig& cfg) {
  cfg.validate();
  if (label < 0 || static_cast<std::size_t>(label) >= proxies.identities()) {
    throw Error(ErrorCode::kIdMismatch, "label out of range");
  }
  if (x.size() != proxies.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "feature and proxy dimensions differ");
  }
  const std::size_t n = proxies.identities();
  const auto y = static_cast<std::size_t>(label);
  S2CLogits out;
  out.cosines.resize(n);
  out.logits.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.cosines[j] = dot(x, proxies.weights().row(j));
    out.logits[j] = cfg.scale * out.cosines[j];
  }

  const double c = out.cosines[y];
  const double m = cfg.margin;
  switch (cfg.kind) {
    case MarginKind::kPlain:
      break;
    case MarginKind::kCosine:
      out.logits[y] = cfg.scale * (c - m);
      break;
    case MarginKind::kAngular: {
      const double cc = std::clamp(c, -1.0, 1.0);
      if (cc > std::cos(std::numbers::pi - m)) {
        const double sin_theta = std::sqrt(std::max(1.0 - cc * cc, 0.0));
        out.logits[y] = cfg.scale * (cc * std::cos(m) - sin_theta * std::sin(m));
        out.target_slope = std::cos(m) + std::sin(m) * cc / std::max(sin_theta, 1e-12);
      } else {
        out.logits[y] = cfg.scale * (c - m * std::sin(m));
      }
      break;
    }
  }
  return out;
}

S2CLossOutput s2c_loss(std::span<const double> x, const ClassProxyMatrix& proxies, int label,
                       const S2CConfig& cfg) {
  const S2CLogits lg = s2c_logits(x, proxies, label, cfg);
  const std::size_t n = proxies.identities();
  const auto y = static_cast<std::size_t>(label);
  const double lse = log_sum_exp(lg.logits);

  S2CLossOutput out;
  out.value = lse - lg.logits[y];
  out.d_x.assign(x.size(), 0.0);
  out.d_proxies = Matrix(n, proxies.dim());
  for (std::size_t j = 0; j < n; ++j) {
    double d_logit = std::exp(lg.logits[j] - lse);
    double slope = 1.0;
    if (j == y) {
      d_logit -= 1.0;
      slope = lg.target_slope;
    }
    const double d_cos = cfg.scale * d_logit * slope;
    const auto w = proxies.weights().row(j);
    auto dw = out.d_proxies.row(j);
    for (std::size_t k = 0; k < x.size(); ++k) {
      out.d_x[k] += d_cos * w[k];
      dw[k] = d_cos * x[k];
    }
  }
  return out;
}

}  // namespace uss
