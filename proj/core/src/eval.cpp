#include "uss/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "uss/error.hpp"

namespace uss {
namespace {

void require_scores(const ScoreSet& s) {
  if (s.positives.empty() || s.negatives.empty()) {
    throw Error(ErrorCode::kEmptyScores, "need at least one positive and one negative score");
  }
}

std::vector<double> sorted(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Number of elements of an ascending vector that are >= / > / < x.
std::size_t count_at_least(const std::vector<double>& asc, double x) {
  return static_cast<std::size_t>(asc.end() - std::lower_bound(asc.begin(), asc.end(), x));
}
std::size_t count_above(const std::vector<double>& asc, double x) {
  return static_cast<std::size_t>(asc.end() - std::upper_bound(asc.begin(), asc.end(), x));
}

std::vector<double> distinct_midpoints(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    mids.push_back(0.5 * (values[i] + values[i + 1]));
  }
  return mids;
}

}  // namespace

UnifiedThresholdCheck unified_threshold_check(const ScoreSet& scores) {
  require_scores(scores);
  const double max_neg = *std::max_element(scores.negatives.begin(), scores.negatives.end());
  const double min_pos = *std::min_element(scores.positives.begin(), scores.positives.end());
  UnifiedThresholdCheck out;
  out.feasibility_margin = min_pos - max_neg;
  out.unified_ok = max_neg < min_pos;
  if (out.unified_ok) out.interval = FeasibleInterval{max_neg, min_pos};
  return out;
}

ScoreSet all_pair_scores(const Matrix& embeddings, std::span<const int> labels) {
  if (embeddings.rows() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embeddings and labels differ in count");
  }
  ScoreSet out;
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.rows(); ++j) {
      const double s = cosine_similarity(embeddings.row(i), embeddings.row(j)).value();
      (labels[i] == labels[j] ? out.positives : out.negatives).push_back(s);
    }
  }
  return out;
}

std::vector<LabeledScore> labeled_pairs(const ScoreSet& scores) {
  std::vector<LabeledScore> out;
  out.reserve(scores.positives.size() + scores.negatives.size());
  for (double s : scores.positives) out.push_back({s, true});
  for (double s : scores.negatives) out.push_back({s, false});
  return out;
}

double accuracy_at(std::span<const LabeledScore> pairs, double threshold) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyScores, "no pairs to score");
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if ((p.score >= threshold) == p.same) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

double optimal_threshold(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() && negatives.empty()) {
    throw Error(ErrorCode::kEmptyScores, "no scores to threshold");
  }
  const std::vector<double> pos = sorted(positives);
  const std::vector<double> neg = sorted(negatives);
  std::vector<double> values(pos.begin(), pos.end());
  values.insert(values.end(), neg.begin(), neg.end());
  const double lo = std::min(-1.0, *std::min_element(values.begin(), values.end()));
  const double hi = std::max(1.0, *std::max_element(values.begin(), values.end()));
  values.push_back(lo);
  values.push_back(hi);
  const std::vector<double> candidates = distinct_midpoints(std::move(values));

  std::size_t best = 0;
  std::vector<std::size_t> tied;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double tau = candidates[c];
    const std::size_t correct = count_at_least(pos, tau) + (neg.size() - count_at_least(neg, tau));
    if (correct > best || tied.empty()) {
      best = correct;
      tied.assign(1, c);
    } else if (correct == best) {
      tied.push_back(c);
    }
  }
  return candidates[tied[(tied.size() - 1) / 2]];
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptyScores, "quantile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(pos));
  const std::size_t upper = std::min(lower + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lower);
  return values[lower] + frac * (values[upper] - values[lower]);
}

ThresholdDistribution per_identity_thresholds(const Matrix& embeddings,
                                              std::span<const int> labels, int identities,
                                              std::uint64_t seed) {
  if (embeddings.rows() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embeddings and labels differ in count");
  }
  if (identities < 2) {
    throw Error(ErrorCode::kInsufficientPairs, "need at least two identities for negatives");
  }
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(identities));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= identities) {
      throw Error(ErrorCode::kInvalidConfig, "label out of range");
    }
    groups[static_cast<std::size_t>(labels[i])].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> anchor(groups.size());
  std::vector<std::size_t> gallery(groups.size());
  for (std::size_t id = 0; id < groups.size(); ++id) {
    const auto& members = groups[id];
    if (members.size() < 2) {
      throw Error(ErrorCode::kInsufficientPairs,
                  "identity " + std::to_string(id) + " has no positive pair");
    }
    std::uniform_int_distribution<std::size_t> first(0, members.size() - 1);
    std::uniform_int_distribution<std::size_t> second(0, members.size() - 2);
    const std::size_t a = first(rng);
    std::size_t g = second(rng);
    if (g >= a) ++g;
    anchor[id] = members[a];
    gallery[id] = members[g];
  }

  ThresholdDistribution out;
  std::vector<double> thresholds;
  std::vector<double> negs;
  for (std::size_t id = 0; id < groups.size(); ++id) {
    const auto x = embeddings.row(anchor[id]);
    const double pos = cosine_similarity(x, embeddings.row(gallery[id])).value();
    negs.clear();
    for (std::size_t other = 0; other < groups.size(); ++other) {
      if (other != id) negs.push_back(cosine_similarity(x, embeddings.row(gallery[other])).value());
    }
    const double t = optimal_threshold(std::span<const double>(&pos, 1), negs);
    out.per_identity.push_back(
        {static_cast<int>(id), t, pos, *std::max_element(negs.begin(), negs.end())});
    thresholds.push_back(t);
  }
  out.min = *std::min_element(thresholds.begin(), thresholds.end());
  out.max = *std::max_element(thresholds.begin(), thresholds.end());
  out.q1 = quantile(thresholds, 0.25);
  out.median = quantile(thresholds, 0.5);
  out.q3 = quantile(thresholds, 0.75);
  return out;
}

std::vector<TarAtFarRow> tar_at_far(const ScoreSet& scores, std::span<const double> far_targets) {
  require_scores(scores);
  std::vector<double> neg_desc(scores.negatives.begin(), scores.negatives.end());
  std::sort(neg_desc.begin(), neg_desc.end(), std::greater<>());
  const std::vector<double> pos = sorted(scores.positives);
  const std::size_t n = neg_desc.size();
  const double nd = static_cast<double>(n);

  std::vector<TarAtFarRow> rows;
  for (double f : far_targets) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "FAR target outside [0, 1]");
    // Largest number of false accepts k with k / n <= f.
    auto allowed = static_cast<std::size_t>(std::floor(f * nd));
    while (allowed > 0 && static_cast<double>(allowed) / nd > f) --allowed;
    while (allowed < n && static_cast<double>(allowed + 1) / nd <= f) ++allowed;

    TarAtFarRow row;
    row.far = f;
    row.threshold = allowed >= n ? std::nextafter(neg_desc.back(), -std::numeric_limits<double>::infinity())
                                 : neg_desc[allowed];
    row.tar = static_cast<double>(count_above(pos, row.threshold)) / static_cast<double>(pos.size());
    rows.push_back(row);
  }
  return rows;
}

double best_accuracy_threshold(std::span<const LabeledScore> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyScores, "no pairs to threshold");
  std::vector<double> pos;
  std::vector<double> neg;
  for (const auto& p : pairs) (p.same ? pos : neg).push_back(p.score);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> values;
  for (const auto& p : pairs) values.push_back(p.score);
  std::vector<double> candidates = distinct_midpoints(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  candidates.insert(candidates.begin(), *lo - 1.0);
  candidates.push_back(*hi + 1.0);

  double best_threshold = candidates.front();
  std::size_t best = 0;
  bool first = true;
  for (double tau : candidates) {
    const std::size_t correct = count_at_least(pos, tau) + (neg.size() - count_at_least(neg, tau));
    if (first || correct > best) {
      best = correct;
      best_threshold = tau;
      first = false;
    }
  }
  return best_threshold;
}

KFoldResult kfold_accuracy(std::span<const LabeledScore> pairs, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidConfig, "k-fold needs k >= 2");
  const std::size_t n = pairs.size();
  const auto folds = static_cast<std::size_t>(k);
  if (n < folds) {
    throw Error(ErrorCode::kInsufficientPairs,
                std::to_string(n) + " pairs cannot fill " + std::to_string(k) + " folds");
  }
  const bool has_pos = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.same; });
  const bool has_neg = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return !p.same; });
  if (!has_pos || !has_neg) {
    throw Error(ErrorCode::kInsufficientPairs, "k-fold needs both positive and negative pairs");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  KFoldResult out;
  std::vector<LabeledScore> train;
  std::vector<LabeledScore> test;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t begin = f * n / folds;
    const std::size_t end = (f + 1) * n / folds;
    train.clear();
    test.clear();
    for (std::size_t i = 0; i < n; ++i) {
      (i >= begin && i < end ? test : train).push_back(pairs[order[i]]);
    }
    const double tau = best_accuracy_threshold(train);
    out.thresholds.push_back(tau);
    out.folds.push_back(accuracy_at(test, tau));
  }
  out.mean = std::accumulate(out.folds.begin(), out.folds.end(), 0.0) /
             static_cast<double>(out.folds.size());
  return out;
}

double eer(const ScoreSet& scores) {
  require_scores(scores);
  const std::vector<double> pos = sorted(scores.positives);
  const std::vector<double> neg = sorted(scores.negatives);
  std::vector<double> sweep(pos.begin(), pos.end());
  sweep.insert(sweep.end(), neg.begin(), neg.end());
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  sweep.push_back(std::numeric_limits<double>::infinity());

  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  // Accept-all starting point: FAR = 1, FRR = 0.
  double prev_far = 1.0;
  double prev_frr = 0.0;
  for (double tau : sweep) {
    const double far = static_cast<double>(count_at_least(neg, tau)) / nn;
    const double frr = static_cast<double>(pos.size() - count_at_least(pos, tau)) / np;
    const double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0) return far;
      const double prev_diff = prev_far - prev_frr;
      const double alpha = prev_diff / (prev_diff - diff);
      return prev_far + alpha * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
  }
  return prev_far;  // unreachable: the +inf sweep point has FAR 0, FRR 1
}

EvalReport evaluate(const Matrix& embeddings, std::span<const int> labels, int identities,
                    const EvalOptions& options) {
  const ScoreSet scores = all_pair_scores(embeddings, labels);
  EvalReport report;
  report.samples = embeddings.rows();
  report.positive_pairs = scores.positives.size();
  report.negative_pairs = scores.negatives.size();
  const UnifiedThresholdCheck check = unified_threshold_check(scores);
  report.unified_ok = check.unified_ok;
  report.feasible_interval = check.interval;
  report.feasibility_margin = check.feasibility_margin;
  report.thresholds = per_identity_thresholds(embeddings, labels, identities, options.seed);
  report.tar_at_far = tar_at_far(scores, options.far_targets);
  const std::vector<LabeledScore> pairs = labeled_pairs(scores);
  report.kfold = kfold_accuracy(pairs, options.folds, options.seed);
  report.eer = eer(scores);
  report.learned_t = options.learned_t;
  if (options.learned_t) report.accuracy_at_learned_t = accuracy_at(pairs, *options.learned_t);
  return report;
}

}  // namespace uss
