#include "uss/s2s_losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "uss/error.hpp"

namespace uss {

double InequalityReport::min_slack() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : checks) {
    if (!c.skipped) m = std::min(m, c.slack);
  }
  return m;
}

bool InequalityReport::any_skipped() const {
  return std::any_of(checks.begin(), checks.end(), [](const auto& c) { return c.skipped; });
}

const InequalityCheck* InequalityReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

constexpr double kLog2 = std::numbers::ln2;

// log(1 + e^{num} / e^{den}) evaluated as written, ratio of exponentials and
// all. Kept literal so the identity with the softplus form is a real check.
double log1p_ratio(double num, double den) { return std::log1p(std::exp(num) / std::exp(den)); }

InequalityCheck bound(const char* name, double lhs, double rhs) {
  return {name, lhs, rhs, rhs - lhs, false};
}

InequalityCheck skipped(const char* name) { return {name, 0.0, 0.0, 0.0, true}; }

double naive_value(const SimilarityRow& row, double gamma) {
  return naive_loss(row, LossConfig{gamma, 0.0}).value;
}

}  // namespace

InequalityReport check_row_inequalities(const SimilarityRow& row, std::optional<double> t,
                                        const LossConfig& cfg) {
  row.validate();
  cfg.validate();
  namespace iq = inequality;
  const double g = cfg.gamma;
  const double others = static_cast<double>(row.negs.size());
  const double n = others + 1.0;
  const double naive = naive_value(row, g);

  CompensatedSum neg_sum;
  for (double s : row.negs) neg_sum.add(g * s);
  const double scaled_mean_neg = neg_sum.value() / others;

  const double mean_term = log1p_ratio(scaled_mean_neg, g * row.pos);
  CompensatedSum pair_terms;
  for (double s : row.negs) pair_terms.add(log1p_ratio(g * s, g * row.pos));

  InequalityReport report;
  report.checks.push_back(bound(iq::kNaiveVsMeanBound, naive, 2.0 * mean_term - 2.0 * kLog2));
  report.checks.push_back(
      bound(iq::kNaiveVsPairBound, naive, 2.0 / others * pair_terms.value() - 2.0 * kLog2));

  const double combined = mean_term + pair_terms.value();
  report.checks.push_back(bound(iq::kChainAmGm, n / 2.0 * naive + n * kLog2, combined));

  const double max_neg = *std::max_element(row.negs.begin(), row.negs.end());
  const bool feasible = t.has_value() && max_neg < *t && *t <= row.pos;
  if (feasible) {
    const double gt = g * *t;
    CompensatedSum thr_pairs;
    for (double s : row.negs) thr_pairs.add(log1p_ratio(g * s, gt));
    const double threshold_bound = log1p_ratio(gt, g * row.pos) + thr_pairs.value();
    const double uss_form =
        uss_loss(row, ThresholdParams::unified(gt), LossConfig{g, 0.0}).value;
    report.checks.push_back(bound(iq::kChainThreshold, combined, threshold_bound));
    InequalityCheck identity{iq::kChainUssIdentity, uss_form, threshold_bound,
                             -std::abs(threshold_bound - uss_form), false};
    report.checks.push_back(identity);
  } else {
    report.checks.push_back(skipped(iq::kChainThreshold));
    report.checks.push_back(skipped(iq::kChainUssIdentity));
  }

  std::vector<double> logits{g * row.pos};
  for (double s : row.negs) logits.push_back(g * s);
  const double scale = n / others;
  const double log_softmax_pos = g * row.pos - log_sum_exp(logits);
  report.checks.push_back(bound(iq::kNaiveVsSoftmax, naive,
                                -scale * log_softmax_pos - n * std::log(n) / others));
  const double soft = s2s_softmax_loss(row, LossConfig{g, 0.0}).value;
  report.checks.push_back(
      bound(iq::kNaiveVsSoftmaxLoss, naive, scale * soft - scale * std::log(n)));
  return report;
}

InequalityReport check_matrix_inequalities(const Matrix& similarities,
                                           std::optional<std::vector<double>> t_vec,
                                           const LossConfig& cfg) {
  cfg.validate();
  namespace iq = inequality;
  const std::size_t count = similarities.rows();
  if (count < 2 || similarities.cols() != count) {
    throw Error(ErrorCode::kShapeMismatch, "similarity matrix must be square with N >= 2");
  }
  if (t_vec && t_vec->size() != count) {
    throw Error(ErrorCode::kShapeMismatch, "one threshold per identity expected");
  }
  const double g = cfg.gamma;
  const double n = static_cast<double>(count);
  const Matrix& s = similarities;

  CompensatedSum naive_sum;
  CompensatedSum pair_sum;
  CompensatedSum combined_sum;
  for (std::size_t i = 0; i < count; ++i) {
    const SimilarityRow row = row_of(s, i);
    naive_sum.add(naive_value(row, g));
    CompensatedSum neg_sum;
    for (double v : row.negs) neg_sum.add(g * v);
    combined_sum.add(log1p_ratio(neg_sum.value() / (n - 1.0), g * s(i, i)));
    for (std::size_t j = 0; j < count; ++j) {
      if (j == i) continue;
      const double term = log1p_ratio(g * s(i, j), g * s(j, j));
      pair_sum.add(term);
      combined_sum.add(term);
    }
  }
  const double naive_total = naive_sum.value();

  InequalityReport report;
  report.checks.push_back(bound(iq::kSummedNaiveVsPair, naive_total,
                                2.0 / (n - 1.0) * pair_sum.value() - 2.0 * n * kLog2));
  report.checks.push_back(bound(iq::kSummedChainAmGm, n / 2.0 * naive_total + n * n * kLog2,
                                combined_sum.value()));

  bool feasible = t_vec.has_value();
  for (std::size_t i = 0; feasible && i < count; ++i) {
    const double ti = (*t_vec)[i];
    if (!(ti <= s(i, i))) feasible = false;
    for (std::size_t j = 0; feasible && j < count; ++j) {
      if (j != i && !(s(i, j) < ti && s(j, i) < ti)) feasible = false;
    }
  }
  if (feasible) {
    std::vector<double> b(count);
    for (std::size_t i = 0; i < count; ++i) b[i] = g * (*t_vec)[i];
    const ThresholdParams thr = ThresholdParams::per_identity(b);
    CompensatedSum bce_sum;
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<int> neg_ids;
      for (std::size_t j = 0; j < count; ++j) {
        if (j != i) neg_ids.push_back(static_cast<int>(j));
      }
      bce_sum.add(
          s2s_bce_loss(row_of(s, i), static_cast<int>(i), neg_ids, thr, LossConfig{g, 0.0}).value);
    }
    report.checks.push_back(
        bound(iq::kSummedChainThreshold, combined_sum.value(), bce_sum.value()));
    report.checks.push_back(bound(iq::kSummedNaiveVsBce, naive_total,
                                  2.0 / n * bce_sum.value() - 2.0 * n * kLog2));
  } else {
    report.checks.push_back(skipped(iq::kSummedChainThreshold));
    report.checks.push_back(skipped(iq::kSummedNaiveVsBce));
  }
  return report;
}

}  // namespace uss
