// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uss/eval.hpp"
#include "uss/objective.hpp"
#include "uss/s2c_losses.hpp"
#include "uss/s2s_losses.hpp"
#include "uss/trainer.hpp"
#include "uss/verification.hpp"

namespace {

using namespace uss;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  const GradcheckReport report = run_gradcheck(GradcheckOptions{});
  const double elapsed = seconds_since(start);

  bool covered = true;
  for (Preset p : all_presets()) {
    const std::string name(preset_name(p));
    covered = covered && report.find("objective:" + name) && report.find("network:" + name);
  }
  double worst_scalar = 0.0;
  double worst_network = 0.0;
  for (const auto& c : report.components) {
    double& worst = c.name.rfind("network:", 0) == 0 ? worst_network : worst_scalar;
    worst = std::max(worst, c.max_rel_error);
  }
  std::ostringstream d;
  d << report.components.size() << " components, max rel err " << fmt(worst_scalar)
    << " (losses) / " << fmt(worst_network) << " (network), " << fmt(elapsed, 3) << " s";
  return {report.passed() && covered && elapsed < 60.0, d.str()};
}

Outcome inequality_suite() {
  const auto start = Clock::now();
  TheoryCheckOptions opt;
  opt.trials = 1000;
  const TheoryReport report = run_theory_check(opt);
  const double elapsed = seconds_since(start);

  bool enough = !report.inequalities.empty();
  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& s : report.inequalities) {
    enough = enough && s.evaluated >= 1000;
    min_slack = std::min(min_slack, s.min_slack);
  }
  std::ostringstream d;
  d << report.inequalities.size() << " inequalities, >= 1000 evaluations each: "
    << (enough ? "yes" : "no") << ", min slack " << fmt(min_slack) << ", " << fmt(elapsed, 3)
    << " s";
  return {report.inequalities_passed() && enough && elapsed < 30.0, d.str()};
}

Outcome stationary_threshold() {
  const auto start = Clock::now();
  const ThresholdDescent descent = descend_threshold(8, 4.0);
  const double target = stationary_b(8, 4.0).b;
  bool ok = std::abs(descent.b - target) < 1e-6 && std::abs(target - 0.9937) < 1e-4;

  double worst_db = 0.0;
  int flags_ok = 0;
  int cases = 0;
  for (double n : {2.0, 10.0, 1e3, 1e6}) {
    for (double gamma : {1.0, 4.0, 16.0, 64.0}) {
      const StationaryThreshold s = stationary_b(n, gamma);
      const SimilarityRow row{1.0, std::vector<double>(static_cast<std::size_t>(n) - 1, -1.0)};
      const double d_b = uss_loss(row, ThresholdParams::unified(s.b), LossConfig{gamma, 0.0}).d_b;
      worst_db = std::max(worst_db, std::abs(d_b));
      flags_ok += s.in_range == (n < (std::exp(2.0 * gamma) + 3.0) / 2.0);
      ++cases;
    }
  }
  const double elapsed = seconds_since(start);
  ok = ok && worst_db < 1e-12 && flags_ok == cases && elapsed < 10.0;
  std::ostringstream d;
  d << "descent b=" << fmt(descent.b, 10) << " vs closed form " << fmt(target, 10)
    << " after " << descent.iterations << " steps; max |d_b| " << fmt(worst_db) << "; range flag "
    << flags_ok << "/" << cases << "; " << fmt(elapsed, 3) << " s";
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------
// Training runs shared by criteria 4-7.

struct RunSummary {
  std::optional<double> learned_t;
  EvalReport holdout;
};

RunSummary train_and_evaluate(Preset preset, double spread, std::uint64_t seed,
                              double margin = 0.1) {
  TrainConfig cfg;
  cfg.objective.preset = preset;
  cfg.objective.gamma = 64.0;
  cfg.objective.margin = margin;
  cfg.data.spread = spread;
  cfg.data.seed = seed;
  cfg.seed = seed;
  const DatasetSplit split = split_holdout(generate_synthetic(cfg.data), cfg.holdout_per_identity);
  const TrainResult result = train(cfg, split.train, split.holdout);

  EvalOptions opt;
  opt.seed = derive_seed(seed, 5);
  RunSummary out;
  if (cfg.objective.threshold_use() == ThresholdUse::kUnified) {
    out.learned_t = result.state.thresholds.t(cfg.objective.gamma);
    opt.learned_t = out.learned_t;
  }
  const Matrix embeddings = result.state.net.forward(split.holdout.features).outputs;
  out.holdout = evaluate(embeddings, split.holdout.labels, split.holdout.num_identities, opt);
  return out;
}

double tar_at_1e2(const EvalReport& r) {
  for (const auto& row : r.tar_at_far) {
    if (row.far == 1e-2) return row.tar;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Outcome unified_threshold_learning() {
  const auto start = Clock::now();
  const RunSummary run = train_and_evaluate(Preset::kUssMargin, 0.25, 0);
  const double elapsed = seconds_since(start);
  const double t = *run.learned_t;
  const double accuracy = *run.holdout.accuracy_at_learned_t;
  const double violation = -run.holdout.feasibility_margin;
  const bool a = t > -1.0 && t < 1.0;
  const bool b = accuracy >= 0.99;
  const bool c = run.holdout.unified_ok || violation < 0.02;
  std::ostringstream d;
  d << "(a) t=" << fmt(t) << (a ? " ok" : " FAIL") << "; (b) held-out accuracy at t "
    << fmt(accuracy) << (b ? " ok" : " FAIL") << "; (c) unified_ok="
    << (run.holdout.unified_ok ? "true" : "false") << ", violation " << fmt(violation)
    << (c ? " ok" : " FAIL") << "; " << fmt(elapsed, 3) << " s";
  return {a && b && c && elapsed < 300.0, d.str()};
}

struct SeedRuns {
  RunSummary uss_m;
  RunSummary uss;
  RunSummary soft;
  RunSummary unitsface_hard;
  RunSummary cos_margin_hard;
  RunSummary uss_m_hard;
};

const std::vector<SeedRuns>& seed_runs() {
  static const std::vector<SeedRuns> runs = [] {
    std::vector<SeedRuns> out;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      out.push_back({train_and_evaluate(Preset::kUssMargin, 0.25, seed),
                     train_and_evaluate(Preset::kUss, 0.25, seed, 0.0),
                     train_and_evaluate(Preset::kSoftmax, 0.25, seed),
                     train_and_evaluate(Preset::kUniTS, 0.35, seed),
                     train_and_evaluate(Preset::kCosMargin, 0.35, seed),
                     train_and_evaluate(Preset::kUssMargin, 0.35, seed)});
    }
    return out;
  }();
  return runs;
}

Outcome threshold_compactness() {
  int wins = 0;
  std::ostringstream d;
  d << "iqr uss/soft, t in [min,max]:";
  for (const auto& r : seed_runs()) {
    const auto& th = r.uss_m.holdout.thresholds;
    const bool compact = th.iqr() <= r.soft.holdout.thresholds.iqr();
    const bool inside = *r.uss_m.learned_t >= th.min && *r.uss_m.learned_t <= th.max;
    wins += compact && inside;
    d << ' ' << fmt(th.iqr(), 3) << '/' << fmt(r.soft.holdout.thresholds.iqr(), 3) << ','
      << (inside ? "in" : "out");
  }
  d << "; " << wins << "/5 seeds";
  return {wins >= 4, d.str()};
}

Outcome margin_effect() {
  int wins = 0;
  std::ostringstream d;
  d << "TAR@1e-2 m=0.1 vs m=0:";
  for (const auto& r : seed_runs()) {
    wins += tar_at_1e2(r.uss_m.holdout) >= tar_at_1e2(r.uss.holdout);
    d << ' ' << fmt(tar_at_1e2(r.uss_m.holdout), 3) << '/' << fmt(tar_at_1e2(r.uss.holdout), 3);
  }
  d << "; " << wins << "/5 seeds";
  return {wins >= 4, d.str()};
}

Outcome combination_effect() {
  int wins = 0;
  std::ostringstream d;
  d << "TAR@1e-2 unitsface vs cos-margin, uss-m:";
  for (const auto& r : seed_runs()) {
    const double mixed = tar_at_1e2(r.unitsface_hard.holdout);
    const double cos = tar_at_1e2(r.cos_margin_hard.holdout);
    const double uss = tar_at_1e2(r.uss_m_hard.holdout);
    wins += mixed >= cos && mixed >= uss;
    d << ' ' << fmt(mixed, 3) << '/' << fmt(cos, 3) << ',' << fmt(uss, 3);
  }
  d << "; " << wins << "/5 seeds";
  return {wins >= 4, d.str()};
}

// ---------------------------------------------------------------------------
// Brute-force metric oracles.

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<TarAtFarRow> tar_oracle(const ScoreSet& s, const std::vector<double>& targets) {
  const double below = std::nextafter(*std::min_element(s.negatives.begin(), s.negatives.end()),
                                      -std::numeric_limits<double>::infinity());
  std::vector<double> candidates(s.negatives);
  candidates.push_back(below);
  std::vector<TarAtFarRow> rows;
  for (double f : targets) {
    double best = std::numeric_limits<double>::infinity();
    for (double tau : candidates) {
      double accepted = 0.0;
      for (double n : s.negatives) accepted += n > tau;
      if (accepted / static_cast<double>(s.negatives.size()) <= f) best = std::min(best, tau);
    }
    double tar = 0.0;
    for (double p : s.positives) tar += p > best;
    rows.push_back({f, best, tar / static_cast<double>(s.positives.size())});
  }
  return rows;
}

double eer_oracle(const ScoreSet& s) {
  std::vector<double> sweep(s.positives);
  sweep.insert(sweep.end(), s.negatives.begin(), s.negatives.end());
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  sweep.push_back(std::numeric_limits<double>::infinity());
  double prev_far = 1.0;
  double prev_frr = 0.0;
  for (double tau : sweep) {
    double far = 0.0;
    double frr = 0.0;
    for (double n : s.negatives) far += n >= tau;
    for (double p : s.positives) frr += p < tau;
    far /= static_cast<double>(s.negatives.size());
    frr /= static_cast<double>(s.positives.size());
    if (far <= frr) {
      if (far == frr) return far;
      const double gap = prev_far - prev_frr;
      return prev_far + gap / (gap - (far - frr)) * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
  }
  return prev_far;
}

double kfold_oracle(const std::vector<LabeledScore>& pairs, int k, std::uint64_t seed) {
  const std::size_t n = pairs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  double total = 0.0;
  for (int f = 0; f < k; ++f) {
    const std::size_t lo = static_cast<std::size_t>(f) * n / static_cast<std::size_t>(k);
    const std::size_t hi = static_cast<std::size_t>(f + 1) * n / static_cast<std::size_t>(k);
    const auto in_fold = [&](std::size_t i) { return i >= lo && i < hi; };
    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_fold(i)) scores.push_back(pairs[order[i]].score);
    std::sort(scores.begin(), scores.end());
    std::vector<double> candidates{scores.front() - 1.0};
    for (std::size_t i = 0; i + 1 < scores.size(); ++i)
      if (scores[i] != scores[i + 1]) candidates.push_back((scores[i] + scores[i + 1]) / 2.0);
    candidates.push_back(scores.back() + 1.0);
    double tau = candidates.front();
    int best = -1;
    for (double c : candidates) {
      int correct = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (!in_fold(i)) correct += (pairs[order[i]].score >= c) == pairs[order[i]].same;
      if (correct > best) {
        best = correct;
        tau = c;
      }
    }
    double correct = 0.0;
    for (std::size_t i = lo; i < hi; ++i) correct += (pairs[order[i]].score >= tau) == pairs[order[i]].same;
    total += correct / static_cast<double>(hi - lo);
  }
  return total / k;
}

// Accuracy-maximizing midpoint, middle of the tied candidates.
double threshold_oracle(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<double> v(pos);
  v.insert(v.end(), neg.begin(), neg.end());
  v.push_back(std::min(-1.0, *std::min_element(v.begin(), v.end())));
  v.push_back(std::max(1.0, *std::max_element(v.begin(), v.end())));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<double> tied;
  int best = -1;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double tau = (v[i] + v[i + 1]) / 2.0;
    int correct = 0;
    for (double p : pos) correct += p >= tau;
    for (double n : neg) correct += n < tau;
    if (correct > best) {
      best = correct;
      tied.assign(1, tau);
    } else if (correct == best) {
      tied.push_back(tau);
    }
  }
  return tied[(tied.size() - 1) / 2];
}

Outcome metric_oracles() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 24);
  const std::vector<double> targets{0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3, 1.0};
  int tar_bad = 0;
  int kfold_bad = 0;
  int eer_bad = 0;
  int threshold_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ScoreSet s{draw(rng, static_cast<std::size_t>(size(rng)), -0.5, 1.0),
               draw(rng, static_cast<std::size_t>(size(rng)), -1.0, 0.5)};
    if (trial % 4 == 0) s.negatives.push_back(s.positives.front());  // exact tie

    const auto got = tar_at_far(s, targets);
    const auto want = tar_oracle(s, targets);
    for (std::size_t r = 0; r < targets.size(); ++r) {
      tar_bad += std::abs(got[r].threshold - want[r].threshold) > 1e-12 ||
                 std::abs(got[r].tar - want[r].tar) > 1e-12;
    }
    eer_bad += std::abs(eer(s) - eer_oracle(s)) > 1e-12;

    const auto pairs = labeled_pairs(s);
    if (pairs.size() >= 4) {
      const int k = 2 + trial % 3;
      const auto seed = static_cast<std::uint64_t>(trial);
      kfold_bad += std::abs(kfold_accuracy(pairs, k, seed).mean - kfold_oracle(pairs, k, seed)) > 1e-12;
    }

    // Fig. 3 construction: one positive against the other identities.
    const std::vector<double> pos{s.positives.front()};
    threshold_bad += std::abs(optimal_threshold(pos, s.negatives) - threshold_oracle(pos, s.negatives)) > 1e-12;

    // Whole-pipeline check on embeddings whose two samples per identity
    // coincide, so the per-identity draw cannot change the answer.
    const int identities = 2 + trial % 24;
    const int dim = 4;
    Matrix embeddings(0, static_cast<std::size_t>(dim));
    std::vector<int> labels;
    std::normal_distribution<double> normal;
    for (int id = 0; id < identities; ++id) {
      Vector v(static_cast<std::size_t>(dim));
      for (auto& x : v) x = normal(rng);
      v = l2_normalize(v);
      embeddings.append_row(v);
      embeddings.append_row(v);
      labels.push_back(id);
      labels.push_back(id);
    }
    const auto dist = per_identity_thresholds(embeddings, labels, identities, 7);
    for (int id = 0; id < identities; ++id) {
      const auto self = embeddings.row(static_cast<std::size_t>(2 * id));
      std::vector<double> negs;
      for (int other = 0; other < identities; ++other) {
        if (other == id) continue;
        negs.push_back(cosine_similarity(self, embeddings.row(static_cast<std::size_t>(2 * other))).value());
      }
      const std::vector<double> one{cosine_similarity(self, self).value()};
      threshold_bad += std::abs(dist.per_identity[static_cast<std::size_t>(id)].threshold -
                                threshold_oracle(one, negs)) > 1e-12;
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << "mismatches tar_at_far " << tar_bad << ", kfold " << kfold_bad << ", eer " << eer_bad
    << ", per-identity thresholds " << threshold_bad << "; " << fmt(elapsed, 3) << " s";
  return {tar_bad + kfold_bad + eer_bad + threshold_bad == 0 && elapsed < 10.0, d.str()};
}

// ---------------------------------------------------------------------------

Outcome reduction_identities() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> gammas(1.0, 64.0);
  std::uniform_int_distribution<int> sizes(2, 32);
  double bce_gap = 0.0;
  double s2c_gap = 0.0;
  bool marginal_exact = true;

  for (int trial = 0; trial < 500; ++trial) {
    const int n = sizes(rng);
    const double gamma = gammas(rng);
    SimilarityRow row{unit(rng), draw(rng, static_cast<std::size_t>(n - 1), -1.0, 1.0)};
    std::vector<int> ids;
    for (int j = 1; j < n; ++j) ids.push_back(j);
    const double b = 20.0 * unit(rng);
    const LossConfig cfg{gamma, trial % 2 == 0 ? 0.0 : 0.1};
    const double bce =
        s2s_bce_loss(row, 0, ids, ThresholdParams::per_identity(static_cast<std::size_t>(n), b), cfg).value;
    bce_gap = std::max(bce_gap, std::abs(bce - uss_loss(row, ThresholdParams::unified(b), cfg).value));

    Matrix galleries(static_cast<std::size_t>(n), 8);
    std::normal_distribution<double> normal;
    for (double& x : galleries.values()) x = normal(rng);
    const ClassProxyMatrix proxies(galleries);
    Vector x(8);
    for (double& v : x) v = normal(rng);
    x = l2_normalize(x);
    SimilarityRow s2s;
    for (int j = 0; j < n; ++j) {
      const double sim = dot(x, proxies.weights().row(static_cast<std::size_t>(j)));
      if (j == 0) s2s.pos = sim; else s2s.negs.push_back(sim);
    }
    S2CConfig plain;
    plain.kind = MarginKind::kPlain;
    plain.margin = 0.0;
    plain.scale = gamma;
    s2c_gap = std::max(s2c_gap, std::abs(s2c_loss(x, proxies, 0, plain).value -
                                         s2s_softmax_loss(s2s, LossConfig{gamma, 0.0}).value));

    Matrix anchors(static_cast<std::size_t>(n), 8);
    for (double& v : anchors.values()) v = normal(rng);
    for (std::size_t i = 0; i < anchors.rows(); ++i) {
      const Vector unit_row = l2_normalize(anchors.row(i));
      std::copy(unit_row.begin(), unit_row.end(), anchors.row(i).begin());
    }
    const Matrix& gal = proxies.weights();
    std::vector<int> batch_ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) batch_ids[static_cast<std::size_t>(i)] = i;
    const auto uni = ThresholdParams::unified(b);
    const auto per = ThresholdParams::per_identity(static_cast<std::size_t>(n), b);
    const std::pair<Preset, Preset> pairs[] = {{Preset::kUssMargin, Preset::kUss},
                                               {Preset::kSoftmaxMargin, Preset::kSoftmax},
                                               {Preset::kBceMargin, Preset::kBce}};
    for (const auto& [marginal, vanilla] : pairs) {
      const auto& thr = marginal == Preset::kBceMargin ? per : uni;
      const auto m0 = s2s_batch_loss(marginal, LossConfig{gamma, 0.0}, anchors, gal, batch_ids, thr);
      const auto v = s2s_batch_loss(vanilla, LossConfig{gamma, 0.0}, anchors, gal, batch_ids, thr);
      marginal_exact = marginal_exact && m0.value == v.value && m0.d_b == v.d_b &&
                       m0.d_anchors == v.d_anchors && m0.d_galleries == v.d_galleries;
    }
  }
  std::ostringstream d;
  d << "bce(tied b) vs uss max gap " << fmt(bce_gap) << "; s2c plain vs s2s softmax max gap "
    << fmt(s2c_gap) << "; m=0 marginal == vanilla bitwise: " << (marginal_exact ? "yes" : "no");
  return {bce_gap <= 1e-15 && s2c_gap <= 1e-12 && marginal_exact, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"inequality suite", inequality_suite},
      {"stationary threshold", stationary_threshold},
      {"unified-threshold learning at desk scale", unified_threshold_learning},
      {"threshold compactness ordering", threshold_compactness},
      {"margin effect", margin_effect},
      {"combination effect", combination_effect},
      {"metric oracles", metric_oracles},
      {"reduction identities", reduction_identities},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.passed;
    std::cout << (outcome.passed ? "PASS" : "FAIL") << " criterion " << i + 1 << ": "
              << criteria[i].first << " -- " << outcome.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
