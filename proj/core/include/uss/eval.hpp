#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uss/numerics.hpp"

namespace uss {

struct ScoreSet {
  std::vector<double> positives;
  std::vector<double> negatives;
};

struct LabeledScore {
  double score = 0.0;
  bool same = false;
};

// Half-open interval (lower, upper] of thresholds that separate every pair.
struct FeasibleInterval {
  double lower = 0.0;
  double upper = 0.0;
};

struct UnifiedThresholdCheck {
  bool unified_ok = false;
  std::optional<FeasibleInterval> interval;
  double feasibility_margin = 0.0;  // min(pos) - max(neg)
};

/// unified_ok iff max(neg) < min(pos). Throws EmptyScores.
UnifiedThresholdCheck unified_threshold_check(const ScoreSet& scores);

/// Cosine similarities of every unordered pair of rows, split by label equality.
ScoreSet all_pair_scores(const Matrix& embeddings, std::span<const int> labels);
std::vector<LabeledScore> labeled_pairs(const ScoreSet& scores);

/// Fraction of pairs classified correctly when `score >= threshold` means
/// "same identity".
double accuracy_at(std::span<const LabeledScore> pairs, double threshold);

/// Threshold that maximizes accuracy on pos/neg. Candidates are midpoints of
/// adjacent distinct values of the scores plus the sentinels min(-1, scores)
/// and max(1, scores); a separable set therefore gets the midpoint of
/// (max neg, min pos). Ties go to the middle candidate of the tied set.
double optimal_threshold(std::span<const double> positives, std::span<const double> negatives);

struct IdentityThreshold {
  int identity = 0;
  double threshold = 0.0;
  double positive = 0.0;
  double hardest_negative = 0.0;
};

struct ThresholdDistribution {
  std::vector<IdentityThreshold> per_identity;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;

  double iqr() const noexcept { return q3 - q1; }
};

/// For every identity: one anchor and one gallery sample drawn with `seed`.
/// The identity's positive is anchor-vs-own-gallery, its negatives are
/// anchor-vs-every-other-gallery, and its threshold is optimal_threshold of
/// those. Throws InsufficientPairs when an identity has < 2 samples.
ThresholdDistribution per_identity_thresholds(const Matrix& embeddings,
                                              std::span<const int> labels, int identities,
                                              std::uint64_t seed);

/// Linear-interpolated quantile (q in [0, 1]) of unsorted values.
double quantile(std::vector<double> values, double q);

struct TarAtFarRow {
  double far = 0.0;
  double threshold = 0.0;
  double tar = 0.0;
};

/// For each target f the smallest threshold whose false-accept fraction
/// (negatives strictly above it) is at most f, and the fraction of positives
/// strictly above that threshold.
std::vector<TarAtFarRow> tar_at_far(const ScoreSet& scores, std::span<const double> far_targets);

struct KFoldResult {
  double mean = 0.0;
  std::vector<double> folds;
  std::vector<double> thresholds;
};

/// Seeded shuffle, contiguous folds. Each fold's threshold maximizes accuracy
/// on the other folds (lowest threshold wins ties) and is scored on the fold.
KFoldResult kfold_accuracy(std::span<const LabeledScore> pairs, int k, std::uint64_t seed);

/// Threshold that maximizes accuracy on `pairs`, lowest among ties. Candidates
/// are midpoints of adjacent distinct scores plus one below and one above.
double best_accuracy_threshold(std::span<const LabeledScore> pairs);

/// Equal error rate: FAR = FRR crossing of the threshold sweep, linearly
/// interpolated between adjacent sweep points.
double eer(const ScoreSet& scores);

struct EvalOptions {
  std::vector<double> far_targets{1e-4, 1e-3, 1e-2, 1e-1};
  int folds = 10;
  std::uint64_t seed = 0;
  std::optional<double> learned_t;
};

struct EvalReport {
  std::size_t samples = 0;
  std::size_t positive_pairs = 0;
  std::size_t negative_pairs = 0;
  bool unified_ok = false;
  std::optional<FeasibleInterval> feasible_interval;
  double feasibility_margin = 0.0;
  ThresholdDistribution thresholds;
  std::vector<TarAtFarRow> tar_at_far;
  KFoldResult kfold;
  double eer = 0.0;
  std::optional<double> learned_t;
  std::optional<double> accuracy_at_learned_t;
};

EvalReport evaluate(const Matrix& embeddings, std::span<const int> labels, int identities,
                    const EvalOptions& options);

}  // namespace uss
