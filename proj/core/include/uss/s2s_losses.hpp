#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uss/numerics.hpp"
#include "uss/pairing.hpp"

namespace uss {

struct LossConfig {
  double gamma = 64.0;  // scale on similarities
  double margin = 0.0;  // subtracted from the positive similarity only

  void validate() const;
};

// Learnable threshold offsets. b = gamma * t for the unified threshold, or one
// b_i = gamma * t_i per identity.
class ThresholdParams {
 public:
  enum class Mode { kUnified, kPerIdentity };

  static ThresholdParams unified(double b = 0.0);
  static ThresholdParams per_identity(std::size_t identities, double b = 0.0);
  static ThresholdParams per_identity(std::vector<double> b);

  Mode mode() const noexcept { return mode_; }
  double b() const noexcept { return b_; }
  double& b() noexcept { return b_; }
  const std::vector<double>& b_vec() const noexcept { return b_vec_; }
  std::vector<double>& b_vec() noexcept { return b_vec_; }

  /// t = b / gamma (unified mode).
  double t(double gamma) const noexcept { return b_ / gamma; }
  /// t_i = b_i / gamma (per-identity mode).
  std::vector<double> t_vec(double gamma) const;

  bool operator==(const ThresholdParams&) const = default;

 private:
  Mode mode_ = Mode::kUnified;
  double b_ = 0.0;
  std::vector<double> b_vec_;
};

// One anchor's positive similarity and its similarities to the other
// identities' gallery samples.
struct SimilarityRow {
  double pos = 0.0;
  std::vector<double> negs;

  /// Throws InvalidConfig when negs is empty or a value leaves [-1, 1].
  void validate() const;
};

/// Row `i` of a square similarity matrix: diagonal entry is the positive.
SimilarityRow row_of(const Matrix& similarities, std::size_t i);

struct LossOutput {
  double value = 0.0;
  double d_pos = 0.0;
  std::vector<double> d_negs;
  double d_b = 0.0;
  std::vector<double> d_b_vec;  // per-identity mode only
};

/// gamma * (mean(negs) - pos).
LossOutput naive_loss(const SimilarityRow& row, const LossConfig& cfg);

/// The all-pairs form: averages over every positive and every negative
/// feature of the dataset rather than one sampled gallery per identity.
double naive_loss_full(std::span<const double> anchor, int anchor_label,
                       const IdentityDataset& ds, const LossConfig& cfg,
                       std::optional<std::size_t> self_index = std::nullopt);

/// softplus(-gamma (pos - m) + b) + sum_j softplus(gamma neg_j - b).
/// With m = 0 this is the plain unified-threshold loss; m > 0 its marginal form.
LossOutput uss_loss(const SimilarityRow& row, const ThresholdParams& thr, const LossConfig& cfg);

struct StationaryThreshold {
  double b = 0.0;
  double t = 0.0;
  bool in_range = false;  // t in (-1, 1)
};

/// The b where d(uss)/db = 0 for pos = 1 and N - 1 negatives at -1.
StationaryThreshold stationary_b(double identities, double gamma);

/// True iff N < (e^{2 gamma} + 3) / 2, the analytic condition for |t| < 1.
bool stationary_in_range_condition(double identities, double gamma);

/// -log softmax of the (margin-shifted) positive among all N similarities.
LossOutput s2s_softmax_loss(const SimilarityRow& row, const LossConfig& cfg);

/// Per-identity thresholds: b_{anchor_id} on the positive term and
/// b_{neg_ids[j]} on negative j.
LossOutput s2s_bce_loss(const SimilarityRow& row, int anchor_id, std::span<const int> neg_ids,
                        const ThresholdParams& thr, const LossConfig& cfg);

// ---------------------------------------------------------------------------
// Inequality chains relating the naive loss to the softplus-style losses.

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs; negative means violated
  bool skipped = false;
};

struct InequalityReport {
  std::vector<InequalityCheck> checks;

  double min_slack() const;
  bool any_skipped() const;
  const InequalityCheck* find(const std::string& name) const;
};

/// Bounds on one anchor's naive loss. Threshold-dependent checks run only when
/// `t` separates the row (max(negs) < t <= pos); otherwise they are reported
/// as skipped.
InequalityReport check_row_inequalities(const SimilarityRow& row, std::optional<double> t,
                                        const LossConfig& cfg);

/// Bounds on the naive loss summed over a square batch similarity matrix.
/// `t_vec[i]` is feasible when every off-diagonal entry of row i and column i
/// lies below it and it does not exceed the diagonal entry.
InequalityReport check_matrix_inequalities(const Matrix& similarities,
                                           std::optional<std::vector<double>> t_vec,
                                           const LossConfig& cfg);

namespace inequality {
inline constexpr const char* kNaiveVsMeanBound = "naive<=mean-negative softplus bound";
inline constexpr const char* kNaiveVsPairBound = "naive<=per-negative softplus bound";
inline constexpr const char* kChainAmGm = "chain: scaled naive<=combined softplus bound";
inline constexpr const char* kChainThreshold = "chain: combined bound<=threshold bound";
inline constexpr const char* kChainUssIdentity = "chain: threshold bound==uss form";
inline constexpr const char* kNaiveVsSoftmax = "naive<=log-sum-exp softmax bound";
inline constexpr const char* kNaiveVsSoftmaxLoss = "naive<=N/(N-1)*(softmax loss-log N)";
inline constexpr const char* kSummedNaiveVsPair = "sum naive<=cross-identity pair bound";
inline constexpr const char* kSummedChainAmGm = "sum chain: scaled naive<=combined bound";
inline constexpr const char* kSummedChainThreshold = "sum chain: combined bound<=bce sum";
inline constexpr const char* kSummedNaiveVsBce = "sum naive<=2/N*bce sum-2N log 2";
}  // namespace inequality

}  // namespace uss
