#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace uss {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int configs_per_loss = 200;
  int network_seeds = 20;
  double step = 1e-6;
  // Test hook: flips the sign of every analytic gradient so the suite must fail.
  bool break_sign = false;
};

struct GradcheckComponent {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  long long partials = 0;
  std::string worst;  // description of the configuration with the largest error

  bool passed() const { return max_rel_error < tolerance; }
};

struct GradcheckReport {
  std::vector<GradcheckComponent> components;

  bool passed() const;
  const GradcheckComponent* find(const std::string& name) const;
};

/// Relative error |a - n| / max(1, |a|, |n|).
double gradcheck_relative_error(double analytic, double numeric);

/// Central differences against every analytic partial: scalar losses and the
/// batch objectives at 1e-5, the objectives through a small random network at 1e-4.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

struct TheoryCheckOptions {
  int trials = 1000;
  std::uint64_t seed = 0;
  // Test hook: added to every slack, so a negative value must trip the check.
  double rhs_offset = 0.0;
  double tolerance = 1e-9;
};

struct InequalityStats {
  std::string name;
  long long evaluated = 0;
  long long skipped = 0;
  double min_slack = 0.0;
  std::string worst;
};

struct StationarityCase {
  double identities = 0.0;
  double gamma = 0.0;
  double b = 0.0;
  double t = 0.0;
  double d_b = 0.0;
  bool in_range = false;
  bool condition = false;

  bool passed() const { return std::abs(d_b) < 1e-12 && in_range == condition; }
};

struct ThresholdDescent {
  double b = 0.0;
  double target = 0.0;
  int iterations = 0;
  double final_gradient = 0.0;
};

struct TheoryReport {
  std::vector<InequalityStats> inequalities;
  std::vector<StationarityCase> stationarity;
  ThresholdDescent descent;
  double tolerance = 1e-9;

  bool inequalities_passed() const;
  bool stationarity_passed() const;
  bool descent_passed() const { return std::abs(descent.b - descent.target) < 1e-6; }
  bool passed() const { return inequalities_passed() && stationarity_passed() && descent_passed(); }
};

/// Plain gradient descent on b with fixed similarities: positive 1, N - 1
/// negatives at -1. Stops when |dL/db| < 1e-14 or after `max_iterations`.
ThresholdDescent descend_threshold(int identities, double gamma, double lr = 5.0,
                                   int max_iterations = 100000);

TheoryReport run_theory_check(const TheoryCheckOptions& options);

}  // namespace uss
