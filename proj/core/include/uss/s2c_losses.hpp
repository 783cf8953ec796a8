#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uss/numerics.hpp"

namespace uss {

enum class MarginKind { kPlain, kCosine, kAngular };

struct S2CConfig {
  double scale = 64.0;
  double margin = 0.35;
  MarginKind kind = MarginKind::kCosine;

  void validate() const;
};

// One unit-norm proxy row per identity.
class ClassProxyMatrix {
 public:
  ClassProxyMatrix() = default;
  /// Normalizes every row of `rows`.
  explicit ClassProxyMatrix(Matrix rows);

  /// Proxy i = normalized mean of the features labelled i.
  static ClassProxyMatrix from_class_means(const Matrix& features, std::span<const int> labels,
                                           int identities);
  static ClassProxyMatrix random(int identities, int dim, std::uint64_t seed);

  std::size_t identities() const noexcept { return weights_.rows(); }
  std::size_t dim() const noexcept { return weights_.cols(); }
  const Matrix& weights() const noexcept { return weights_; }
  /// Mutable access for the optimizer; call normalize() after updating.
  Matrix& weights() noexcept { return weights_; }

  void normalize();
  double max_norm_deviation() const;

  bool operator==(const ClassProxyMatrix&) const = default;

 private:
  Matrix weights_;
};

struct S2CLogits {
  Vector cosines;
  Vector logits;
  // d(target logit)/d(cos theta_y), divided by the scale.
  double target_slope = 1.0;
};

/// Logits s*cos theta_j, with the target replaced by s*(cos theta_y - m)
/// (cosine margin) or s*cos(theta_y + m) (angular margin). When
/// theta_y + m reaches pi the angular target falls back to
/// s*(cos theta_y - m*sin m), which keeps it monotone in theta_y.
S2CLogits s2c_logits(std::span<const double> x, const ClassProxyMatrix& proxies, int label,
                     const S2CConfig& cfg);

struct S2CLossOutput {
  double value = 0.0;
  Vector d_x;
  Matrix d_proxies;  // identities x dim, dense
};

/// Softmax cross-entropy over s2c_logits at class `label`, with gradients for
/// the feature and every proxy row. Cosines are raw dot products; proxies are
/// re-normalized by the optimizer, not here.
S2CLossOutput s2c_loss(std::span<const double> x, const ClassProxyMatrix& proxies, int label,
                       const S2CConfig& cfg);

}  // namespace uss
