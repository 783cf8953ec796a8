#include "uss/verification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "uss/error.hpp"
#include "uss/model.hpp"
#include "uss/objective.hpp"
#include "uss/s2c_losses.hpp"
#include "uss/s2s_losses.hpp"

namespace uss {

bool GradcheckReport::passed() const {
  return std::all_of(components.begin(), components.end(),
                     [](const auto& c) { return c.passed(); });
}

const GradcheckComponent* GradcheckReport::find(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

double gradcheck_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

namespace {

using Rng = std::mt19937_64;

constexpr double kScalarTolerance = 1e-5;
constexpr double kNetworkTolerance = 1e-4;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

Matrix random_unit_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& v : m.row(i)) v = normal(rng);
    const Vector unit = l2_normalize(m.row(i));
    std::copy(unit.begin(), unit.end(), m.row(i).begin());
  }
  return m;
}

void append(Vector& dst, std::span<const double> src) { dst.insert(dst.end(), src.begin(), src.end()); }

// Compares `analytic` against central differences of `loss` around `params`
// and folds the worst error into `component`.
void compare(GradcheckComponent& component, Vector params, const Vector& analytic,
             const std::function<double(const Vector&)>& loss, double step, bool break_sign,
             const std::string& label) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + step;
    const double up = loss(params);
    params[k] = saved - step;
    const double down = loss(params);
    params[k] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = break_sign ? -analytic[k] : analytic[k];
    const double err = gradcheck_relative_error(a, numeric);
    ++component.partials;
    if (component.worst.empty() || err > component.max_rel_error) {
      component.max_rel_error = err;
      component.worst = label + ", partial " + std::to_string(k);
    }
  }
}

// --- scalar sample-to-sample losses ----------------------------------------

enum class RowLoss { kNaive, kUss, kSoftmax, kBce };

struct RowCase {
  const char* name;
  RowLoss loss;
  bool margin;
};

constexpr RowCase kRowCases[] = {
    {"loss:naive", RowLoss::kNaive, false},   {"loss:uss", RowLoss::kUss, false},
    {"loss:uss-m", RowLoss::kUss, true},      {"loss:soft", RowLoss::kSoftmax, false},
    {"loss:soft-m", RowLoss::kSoftmax, true}, {"loss:bce", RowLoss::kBce, false},
    {"loss:bce-m", RowLoss::kBce, true},
};

GradcheckComponent check_row_loss(const RowCase& rc, const GradcheckOptions& opt, Rng& rng) {
  GradcheckComponent comp{rc.name, 0.0, kScalarTolerance, 0, {}};
  for (int c = 0; c < opt.configs_per_loss; ++c) {
    const int n = uniform_int(rng, 2, 12);
    LossConfig cfg{log_uniform(rng, 1.0, 64.0), rc.margin ? uniform(rng, 0.05, 0.5) : 0.0};
    SimilarityRow row{uniform(rng, -0.95, 0.95), {}};
    for (int j = 1; j < n; ++j) row.negs.push_back(uniform(rng, -0.95, 0.95));

    // Per-identity ids drawn from a slightly larger pool so some b_i stay unused.
    const int pool = n + 2;
    std::vector<int> ids(static_cast<std::size_t>(pool));
    for (int i = 0; i < pool; ++i) ids[static_cast<std::size_t>(i)] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    const int anchor_id = ids[0];
    const std::vector<int> neg_ids(ids.begin() + 1, ids.begin() + n);

    ThresholdParams thr = ThresholdParams::unified(cfg.gamma * uniform(rng, -1.0, 1.0));
    if (rc.loss == RowLoss::kBce) {
      std::vector<double> b(static_cast<std::size_t>(pool));
      for (auto& v : b) v = cfg.gamma * uniform(rng, -1.0, 1.0);
      thr = ThresholdParams::per_identity(std::move(b));
    }

    auto unpack = [&](const Vector& p, SimilarityRow& r, ThresholdParams& t) {
      r.pos = p[0];
      r.negs.assign(p.begin() + 1, p.begin() + n);
      if (rc.loss == RowLoss::kUss) t.b() = p[static_cast<std::size_t>(n)];
      if (rc.loss == RowLoss::kBce) t.b_vec().assign(p.begin() + n, p.end());
    };
    auto run = [&](const SimilarityRow& r, const ThresholdParams& t) {
      switch (rc.loss) {
        case RowLoss::kNaive: return naive_loss(r, cfg);
        case RowLoss::kUss: return uss_loss(r, t, cfg);
        case RowLoss::kSoftmax: return s2s_softmax_loss(r, cfg);
        case RowLoss::kBce: return s2s_bce_loss(r, anchor_id, neg_ids, t, cfg);
      }
      return LossOutput{};
    };

    Vector params{row.pos};
    append(params, row.negs);
    if (rc.loss == RowLoss::kUss) params.push_back(thr.b());
    if (rc.loss == RowLoss::kBce) append(params, thr.b_vec());

    const LossOutput out = run(row, thr);
    Vector analytic{out.d_pos};
    append(analytic, out.d_negs);
    if (rc.loss == RowLoss::kUss) analytic.push_back(out.d_b);
    if (rc.loss == RowLoss::kBce) append(analytic, out.d_b_vec);

    SimilarityRow scratch_row;
    ThresholdParams scratch_thr = thr;
    auto loss = [&](const Vector& p) {
      unpack(p, scratch_row, scratch_thr);
      return run(scratch_row, scratch_thr).value;
    };
    std::ostringstream label;
    label << "config " << c << " (N=" << n << ", gamma=" << cfg.gamma << ", m=" << cfg.margin
          << ")";
    compare(comp, params, analytic, loss, opt.step, opt.break_sign, label.str());
  }
  return comp;
}

// --- sample-to-class losses ------------------------------------------------

// Angular margins switch branches at cos(pi - m) and their slope diverges at
// |cos| = 1; configurations within reach of either are redrawn.
bool near_angular_kink(double cosine, double margin) {
  return std::abs(cosine - std::cos(std::numbers::pi - margin)) < 1e-4 ||
         std::abs(cosine) > 0.995;
}

GradcheckComponent check_s2c(const char* name, MarginKind kind, const GradcheckOptions& opt,
                             Rng& rng) {
  GradcheckComponent comp{name, 0.0, kScalarTolerance, 0, {}};
  constexpr int kDim = 6;
  for (int c = 0; c < opt.configs_per_loss; ++c) {
    const int classes = uniform_int(rng, 2, 8);
    S2CConfig cfg{log_uniform(rng, 1.0, 64.0), 0.0, kind};
    if (kind == MarginKind::kCosine) cfg.margin = uniform(rng, 0.05, 0.5);
    if (kind == MarginKind::kAngular) cfg.margin = uniform(rng, 0.1, 0.8);
    const int label = uniform_int(rng, 0, classes - 1);

    Matrix xm;
    ClassProxyMatrix proxies;
    do {
      xm = random_unit_rows(rng, 1, kDim);
      proxies = ClassProxyMatrix(random_unit_rows(rng, static_cast<std::size_t>(classes), kDim));
    } while (kind == MarginKind::kAngular &&
             near_angular_kink(dot(xm.row(0), proxies.weights().row(label)), cfg.margin));

    const Vector x(xm.row(0).begin(), xm.row(0).end());
    Vector params = x;
    append(params, proxies.weights().values());
    const S2CLossOutput out = s2c_loss(x, proxies, label, cfg);
    Vector analytic = out.d_x;
    append(analytic, out.d_proxies.values());

    ClassProxyMatrix scratch = proxies;
    auto loss = [&](const Vector& p) {
      const std::span<const double> xs(p.data(), kDim);
      std::copy(p.begin() + kDim, p.end(), scratch.weights().values().begin());
      return s2c_loss(xs, scratch, label, cfg).value;
    };
    std::ostringstream lbl;
    lbl << "config " << c << " (classes=" << classes << ", s=" << cfg.scale
        << ", m=" << cfg.margin << ")";
    compare(comp, params, analytic, loss, opt.step, opt.break_sign, lbl.str());
  }
  return comp;
}

// --- batch objectives ------------------------------------------------------

struct BatchSetup {
  ObjectiveConfig cfg;
  std::vector<int> identities;
  ThresholdParams thresholds;
  ClassProxyMatrix proxies;
};

BatchSetup random_setup(Preset preset, std::size_t p, std::size_t dim, Rng& rng) {
  BatchSetup s;
  s.cfg.preset = preset;
  s.cfg.gamma = log_uniform(rng, 1.0, 64.0);
  s.cfg.s2c_scale = log_uniform(rng, 1.0, 64.0);
  s.cfg.margin = uniform(rng, 0.05, 0.3);
  s.cfg.cos_margin = uniform(rng, 0.1, 0.5);
  s.cfg.arc_margin = uniform(rng, 0.1, 0.6);
  const int pool = static_cast<int>(p) + 2;
  std::vector<int> ids(static_cast<std::size_t>(pool));
  for (int i = 0; i < pool; ++i) ids[static_cast<std::size_t>(i)] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  s.identities.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(p));
  switch (s.cfg.threshold_use()) {
    case ThresholdUse::kPerIdentity: {
      std::vector<double> b(static_cast<std::size_t>(pool));
      for (auto& v : b) v = s.cfg.gamma * uniform(rng, -1.0, 1.0);
      s.thresholds = ThresholdParams::per_identity(std::move(b));
      break;
    }
    case ThresholdUse::kUnified:
      s.thresholds = ThresholdParams::unified(s.cfg.gamma * uniform(rng, -1.0, 1.0));
      break;
    case ThresholdUse::kNone: s.thresholds = ThresholdParams::unified(0.0); break;
  }
  if (s.cfg.uses_proxies()) {
    s.proxies = ClassProxyMatrix(random_unit_rows(rng, static_cast<std::size_t>(pool), dim));
  }
  return s;
}

// True when the embeddings sit too close to a kink of the objective for a
// central difference to be meaningful.
bool near_kink(const BatchSetup& s, const Matrix& anchors, const Matrix& galleries) {
  const Matrix sims = similarity_matrix(anchors, galleries);
  for (double v : sims.values()) {
    if (std::abs(v) > 0.999) return true;
  }
  if (s.cfg.preset != Preset::kArcMargin) return false;
  for (const Matrix* m : {&anchors, &galleries}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      const double c = dot(m->row(i), s.proxies.weights().row(s.identities[i]));
      if (near_angular_kink(c, s.cfg.arc_margin)) return true;
    }
  }
  return false;
}

Vector dense_or_zero(const Matrix& m, std::size_t size) {
  if (m.empty()) return Vector(size, 0.0);
  return Vector(m.values().begin(), m.values().end());
}

GradcheckComponent check_objective(Preset preset, const GradcheckOptions& opt, Rng& rng) {
  GradcheckComponent comp{"objective:" + std::string(preset_name(preset)), 0.0,
                          kScalarTolerance, 0, {}};
  constexpr std::size_t kDim = 5;
  for (int c = 0; c < opt.configs_per_loss; ++c) {
    const auto p = static_cast<std::size_t>(uniform_int(rng, 2, 5));
    BatchSetup s = random_setup(preset, p, kDim, rng);
    Matrix anchors;
    Matrix galleries;
    do {
      anchors = random_unit_rows(rng, p, kDim);
      galleries = random_unit_rows(rng, p, kDim);
    } while (near_kink(s, anchors, galleries));

    const bool proxies_used = s.cfg.uses_proxies();
    const ThresholdUse use = s.cfg.threshold_use();
    const std::size_t block = p * kDim;

    Vector params(anchors.values().begin(), anchors.values().end());
    append(params, galleries.values());
    if (proxies_used) append(params, s.proxies.weights().values());
    if (use == ThresholdUse::kUnified) params.push_back(s.thresholds.b());
    if (use == ThresholdUse::kPerIdentity) append(params, s.thresholds.b_vec());

    const BatchLossOutput out = evaluate_objective(s.cfg, anchors, galleries, s.identities,
                                                   s.thresholds, proxies_used ? &s.proxies : nullptr);
    Vector analytic = dense_or_zero(out.d_anchors, block);
    append(analytic, dense_or_zero(out.d_galleries, block));
    if (proxies_used) append(analytic, dense_or_zero(out.d_proxies, s.proxies.weights().values().size()));
    if (use == ThresholdUse::kUnified) analytic.push_back(out.d_b);
    if (use == ThresholdUse::kPerIdentity) {
      Vector d = out.d_b_vec;
      d.resize(s.thresholds.b_vec().size(), 0.0);
      append(analytic, d);
    }

    BatchSetup scratch = s;
    Matrix a(p, kDim);
    Matrix g(p, kDim);
    auto loss = [&](const Vector& v) {
      auto it = v.begin();
      std::copy(it, it + static_cast<std::ptrdiff_t>(block), a.values().begin());
      it += static_cast<std::ptrdiff_t>(block);
      std::copy(it, it + static_cast<std::ptrdiff_t>(block), g.values().begin());
      it += static_cast<std::ptrdiff_t>(block);
      if (proxies_used) {
        const auto n = static_cast<std::ptrdiff_t>(scratch.proxies.weights().values().size());
        std::copy(it, it + n, scratch.proxies.weights().values().begin());
        it += n;
      }
      if (use == ThresholdUse::kUnified) scratch.thresholds.b() = *it;
      if (use == ThresholdUse::kPerIdentity) scratch.thresholds.b_vec().assign(it, v.end());
      return evaluate_objective(scratch.cfg, a, g, scratch.identities, scratch.thresholds,
                                proxies_used ? &scratch.proxies : nullptr)
          .value;
    };
    std::ostringstream lbl;
    lbl << "config " << c << " (P=" << p << ", gamma=" << s.cfg.gamma << ")";
    compare(comp, params, analytic, loss, opt.step, opt.break_sign, lbl.str());
  }
  return comp;
}

// --- end to end through the network ----------------------------------------

Matrix rows_slice(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t i = 0; i < count; ++i) {
    std::copy(m.row(first + i).begin(), m.row(first + i).end(), out.row(i).begin());
  }
  return out;
}

Matrix rows_concat(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.values().begin(), top.values().end(), out.values().begin());
  std::copy(bottom.values().begin(), bottom.values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(top.values().size()));
  return out;
}

GradcheckComponent check_network(Preset preset, const GradcheckOptions& opt, Rng& rng) {
  GradcheckComponent comp{"network:" + std::string(preset_name(preset)), 0.0,
                          kNetworkTolerance, 0, {}};
  const std::vector<int> sizes{8, 6, 4};
  constexpr std::size_t kBatch = 4;
  std::normal_distribution<double> normal;
  for (int c = 0; c < opt.network_seeds; ++c) {
    const BatchSetup s = random_setup(preset, kBatch, 4, rng);
    EmbeddingNet net;
    Matrix inputs(2 * kBatch, 8);
    ForwardPass pass;
    // A draw where every hidden unit of some sample is inactive has no
    // direction to normalize; those are redrawn along with kinked ones.
    for (bool usable = false; !usable;) {
      net = EmbeddingNet::he_initialized(sizes, rng());
      for (auto& v : inputs.values()) v = normal(rng);
      try {
        pass = net.forward(inputs);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kZeroNorm) throw;
        continue;
      }
      usable = !near_kink(s, rows_slice(pass.outputs, 0, kBatch),
                          rows_slice(pass.outputs, kBatch, kBatch));
    }

    auto objective = [&](const Matrix& outputs) {
      return evaluate_objective(s.cfg, rows_slice(outputs, 0, kBatch),
                                rows_slice(outputs, kBatch, kBatch), s.identities, s.thresholds,
                                s.cfg.uses_proxies() ? &s.proxies : nullptr);
    };
    const BatchLossOutput out = objective(pass.outputs);
    const Matrix d_out =
        rows_concat(out.d_anchors.empty() ? Matrix(kBatch, 4) : out.d_anchors,
                    out.d_galleries.empty() ? Matrix(kBatch, 4) : out.d_galleries);
    const NetGradients grads = net.backward(pass, d_out);

    Vector params;
    Vector analytic;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      append(params, net.layers()[l].weights.values());
      append(params, net.layers()[l].bias);
      append(analytic, grads.weights[l].values());
      append(analytic, grads.biases[l]);
    }
    EmbeddingNet scratch = net;
    auto loss = [&](const Vector& v) {
      auto it = v.begin();
      for (auto& layer : scratch.mutable_layers()) {
        const auto nw = static_cast<std::ptrdiff_t>(layer.weights.values().size());
        std::copy(it, it + nw, layer.weights.values().begin());
        it += nw;
        const auto nb = static_cast<std::ptrdiff_t>(layer.bias.size());
        std::copy(it, it + nb, layer.bias.begin());
        it += nb;
      }
      return objective(scratch.forward(inputs).outputs).value;
    };
    compare(comp, params, analytic, loss, opt.step, opt.break_sign,
            "network seed " + std::to_string(c));
  }
  return comp;
}

// --- theory check ------------------------------------------------------------

struct SlackTracker {
  std::vector<InequalityStats> stats;
  double offset = 0.0;

  void record(const InequalityReport& report, const std::string& config) {
    for (const auto& check : report.checks) {
      auto it = std::find_if(stats.begin(), stats.end(),
                             [&](const auto& s) { return s.name == check.name; });
      if (it == stats.end()) {
        stats.push_back({check.name, 0, 0, std::numeric_limits<double>::infinity(), {}});
        it = stats.end() - 1;
      }
      if (check.skipped) {
        ++it->skipped;
        continue;
      }
      ++it->evaluated;
      const double slack = check.slack + offset;
      if (slack < it->min_slack) {
        it->min_slack = slack;
        std::ostringstream os;
        os << config << "; lhs=" << check.lhs << " rhs=" << check.rhs;
        it->worst = os.str();
      }
    }
  }
};

std::string describe_row(const SimilarityRow& row, double gamma, std::optional<double> t) {
  std::ostringstream os;
  os.precision(17);
  os << "gamma=" << gamma << " pos=" << row.pos;
  if (t) os << " t=" << *t;
  os << " negs=[";
  for (std::size_t j = 0; j < row.negs.size(); ++j) os << (j ? "," : "") << row.negs[j];
  os << ']';
  return os.str();
}

std::string describe_matrix(const Matrix& s, double gamma,
                            const std::optional<std::vector<double>>& t) {
  std::ostringstream os;
  os.precision(17);
  os << "gamma=" << gamma << " N=" << s.rows() << " S=[";
  for (std::size_t k = 0; k < s.values().size(); ++k) os << (k ? "," : "") << s.values()[k];
  os << ']';
  if (t) {
    os << " t=[";
    for (std::size_t k = 0; k < t->size(); ++k) os << (k ? "," : "") << (*t)[k];
    os << ']';
  }
  return os.str();
}

SimilarityRow stationary_row(std::size_t identities) {
  return SimilarityRow{1.0, std::vector<double>(identities - 1, -1.0)};
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  Rng rng(options.seed);
  GradcheckReport report;
  for (const auto& rc : kRowCases) report.components.push_back(check_row_loss(rc, options, rng));
  report.components.push_back(check_s2c("s2c:plain", MarginKind::kPlain, options, rng));
  report.components.push_back(check_s2c("s2c:cosine", MarginKind::kCosine, options, rng));
  report.components.push_back(check_s2c("s2c:angular", MarginKind::kAngular, options, rng));
  for (Preset p : all_presets()) report.components.push_back(check_objective(p, options, rng));
  for (Preset p : all_presets()) report.components.push_back(check_network(p, options, rng));
  return report;
}

bool TheoryReport::inequalities_passed() const {
  return std::all_of(inequalities.begin(), inequalities.end(), [&](const auto& s) {
    return s.evaluated > 0 && s.min_slack >= -tolerance;
  });
}

bool TheoryReport::stationarity_passed() const {
  return std::all_of(stationarity.begin(), stationarity.end(),
                     [](const auto& c) { return c.passed(); });
}

ThresholdDescent descend_threshold(int identities, double gamma, double lr, int max_iterations) {
  const SimilarityRow row = stationary_row(static_cast<std::size_t>(identities));
  const LossConfig cfg{gamma, 0.0};
  ThresholdDescent result;
  result.target = stationary_b(identities, gamma).b;
  ThresholdParams thr = ThresholdParams::unified(0.0);
  for (int it = 0; it < max_iterations; ++it) {
    const double g = uss_loss(row, thr, cfg).d_b;
    result.final_gradient = g;
    result.iterations = it;
    if (std::abs(g) < 1e-14) break;
    thr.b() -= lr * g;
  }
  result.b = thr.b();
  return result;
}

TheoryReport run_theory_check(const TheoryCheckOptions& options) {
  Rng rng(options.seed);
  SlackTracker tracker{{}, options.rhs_offset};

  for (int trial = 0; trial < options.trials; ++trial) {
    const double gamma = log_uniform(rng, 1.0, 64.0);
    const LossConfig cfg{gamma, 0.0};

    // A row that a threshold separates, and one with no structure at all.
    const int n = uniform_int(rng, 2, 64);
    const double t = uniform(rng, -0.9, 0.9);
    SimilarityRow feasible{uniform(rng, t, 1.0), {}};
    for (int j = 1; j < n; ++j) feasible.negs.push_back(uniform(rng, -1.0, t));
    tracker.record(check_row_inequalities(feasible, t, cfg), describe_row(feasible, gamma, t));

    SimilarityRow free_row{uniform(rng, -1.0, 1.0), {}};
    for (int j = 1; j < n; ++j) free_row.negs.push_back(uniform(rng, -1.0, 1.0));
    tracker.record(check_row_inequalities(free_row, std::nullopt, cfg),
                   describe_row(free_row, gamma, std::nullopt));

    const auto p = static_cast<std::size_t>(uniform_int(rng, 2, 16));
    std::vector<double> tv(p);
    for (auto& v : tv) v = uniform(rng, -0.9, 0.9);
    Matrix sep(p, p);
    Matrix free_m(p, p);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        sep(i, j) = i == j ? uniform(rng, tv[i], 1.0) : uniform(rng, -1.0, std::min(tv[i], tv[j]));
        free_m(i, j) = uniform(rng, -1.0, 1.0);
      }
    }
    std::optional<std::vector<double>> topt = tv;
    tracker.record(check_matrix_inequalities(sep, topt, cfg), describe_matrix(sep, gamma, topt));
    tracker.record(check_matrix_inequalities(free_m, std::nullopt, cfg),
                   describe_matrix(free_m, gamma, std::nullopt));
  }

  TheoryReport report;
  report.tolerance = options.tolerance;
  report.inequalities = std::move(tracker.stats);
  for (double n : {2.0, 10.0, 1e3, 1e6}) {
    for (double gamma : {1.0, 4.0, 16.0, 64.0}) {
      const StationaryThreshold st = stationary_b(n, gamma);
      const double d_b = uss_loss(stationary_row(static_cast<std::size_t>(n)),
                                  ThresholdParams::unified(st.b), LossConfig{gamma, 0.0})
                             .d_b;
      report.stationarity.push_back(
          {n, gamma, st.b, st.t, d_b, st.in_range, stationary_in_range_condition(n, gamma)});
    }
  }
  report.descent = descend_threshold(8, 4.0);
  return report;
}

}  // namespace uss
