#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "uss/error.hpp"
#include "uss/s2s_losses.hpp"

namespace uss {
namespace {

using testing::Gen;

LossConfig cfg(double gamma, double margin = 0.0) {
  LossConfig c;
  c.gamma = gamma;
  c.margin = margin;
  return c;
}

SimilarityRow random_row(Gen& gen, int negatives) { return gen.row(negatives + 1); }

TEST(NaiveLoss, HandArithmetic) {
  const auto out = naive_loss({1.0, {-1.0}}, cfg(1.0));
  EXPECT_DOUBLE_EQ(out.value, -2.0);
  EXPECT_DOUBLE_EQ(out.d_pos, -1.0);
  ASSERT_EQ(out.d_negs.size(), 1u);
  EXPECT_DOUBLE_EQ(out.d_negs[0], 1.0);
  EXPECT_EQ(out.d_b, 0.0);
}

TEST(NaiveLoss, SixtyFourScale) {
  EXPECT_NEAR(naive_loss({0.9, {0.1, -0.3}}, cfg(64.0)).value, -64.0, 1e-12);
}

TEST(NaiveLoss, PositiveAtMeanIsZero) {
  EXPECT_NEAR(naive_loss({0.2, {0.5, -0.1}}, cfg(8.0)).value, 0.0, 1e-14);
}

TEST(NaiveLossFull, OrthogonalTwoIdentityDataset) {
  IdentityDataset ds;
  ds.features = Matrix(0, 2);
  ds.features.append_row(Vector{1.0, 0.0});
  ds.features.append_row(Vector{1.0, 0.0});
  ds.features.append_row(Vector{0.0, 1.0});
  ds.features.append_row(Vector{0.0, 1.0});
  ds.labels = {0, 0, 1, 1};
  ds.num_identities = 2;
  EXPECT_DOUBLE_EQ(naive_loss_full(ds.features.row(0), 0, ds, cfg(1.0), 0), -1.0);
}

TEST(NaiveLossFull, ReducesToPairForm) {
  IdentityDataset ds;
  ds.features = Matrix(0, 2);
  ds.features.append_row(Vector{0.6, 0.8});
  ds.features.append_row(Vector{-0.8, 0.6});
  ds.labels = {0, 1};
  ds.num_identities = 2;
  const Vector anchor{1.0, 0.0};
  const double full = naive_loss_full(anchor, 0, ds, cfg(3.0));
  EXPECT_NEAR(full, naive_loss({0.6, {-0.8}}, cfg(3.0)).value, 1e-15);
}

TEST(NaiveLossFull, MatchesDoubleLoopOracle) {
  SyntheticConfig sc;
  sc.identities = 4;
  sc.samples_per_identity = 5;
  sc.dim = 6;
  sc.spread = 0.5;
  sc.seed = 11;
  const IdentityDataset ds = generate_synthetic(sc);
  for (std::size_t a = 0; a < ds.size(); ++a) {
    double pos = 0.0;
    double neg = 0.0;
    int np = 0;
    int nn = 0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j == a) continue;
      double s = 0.0;
      for (int k = 0; k < ds.dim(); ++k) s += ds.features(a, k) * ds.features(j, k);
      if (ds.labels[j] == ds.labels[a]) {
        pos += s;
        ++np;
      } else {
        neg += s;
        ++nn;
      }
    }
    const double oracle = -16.0 * pos / np + 16.0 * neg / nn;
    EXPECT_NEAR(naive_loss_full(ds.features.row(a), ds.labels[a], ds, cfg(16.0), a), oracle,
                1e-12);
  }
}

TEST(NaiveLossFull, LoneSampleHasNoPositive) {
  IdentityDataset ds;
  ds.features = Matrix(0, 2);
  ds.features.append_row(Vector{1.0, 0.0});
  ds.features.append_row(Vector{0.0, 1.0});
  ds.labels = {0, 1};
  ds.num_identities = 2;
  EXPECT_THROW(naive_loss_full(ds.features.row(0), 0, ds, cfg(1.0), 0), Error);
}

TEST(UssLoss, ScalarOracle) {
  const auto out = uss_loss({1.0, {-1.0}}, ThresholdParams::unified(0.0), cfg(1.0));
  EXPECT_NEAR(out.value, 0.6265233750364456, 1e-15);
  EXPECT_NEAR(out.d_b, 0.0, 1e-16);
}

TEST(UssLoss, AllArgumentsZero) {
  const double gamma = 16.0;
  const double t = 0.25;
  const SimilarityRow row{t, {t, t, t}};
  const auto out = uss_loss(row, ThresholdParams::unified(gamma * t), cfg(gamma));
  EXPECT_NEAR(out.value, 4.0 * std::numbers::ln2, 1e-14);
}

TEST(UssLoss, GradientFormulas) {
  const SimilarityRow row{0.4, {0.1, -0.2, 0.3}};
  const double gamma = 10.0;
  const double b = 1.5;
  const double m = 0.1;
  const auto out = uss_loss(row, ThresholdParams::unified(b), cfg(gamma, m));
  const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double zp = -gamma * (row.pos - m) + b;
  EXPECT_NEAR(out.d_pos, -gamma * sig(zp), 1e-14);
  double db = sig(zp);
  for (std::size_t j = 0; j < row.negs.size(); ++j) {
    EXPECT_NEAR(out.d_negs[j], gamma * sig(gamma * row.negs[j] - b), 1e-14);
    db -= sig(gamma * row.negs[j] - b);
  }
  EXPECT_NEAR(out.d_b, db, 1e-14);
}

TEST(UssLoss, FiniteAtExtremeScale) {
  const auto out = uss_loss({-1.0, {1.0, 1.0}}, ThresholdParams::unified(-500.0), cfg(1000.0));
  EXPECT_TRUE(std::isfinite(out.value));
  EXPECT_TRUE(std::isfinite(out.d_b));
}

TEST(UssLoss, MarginMonotone) {
  Gen gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const SimilarityRow row = random_row(gen, gen.integer(1, 20));
    const auto thr = ThresholdParams::unified(gen.uniform(-20.0, 20.0));
    const double gamma = gen.uniform(1.0, 64.0);
    double previous = -1.0;
    for (double m = 0.0; m <= 0.5; m += 0.05) {
      const double v = uss_loss(row, thr, cfg(gamma, m)).value;
      EXPECT_GE(v, previous);
      previous = v;
    }
  }
}

TEST(UssLoss, ScaleConsistency) {
  const auto thr = ThresholdParams::unified(12.8);
  EXPECT_DOUBLE_EQ(thr.t(64.0), 12.8 / 64.0);
  const auto per = ThresholdParams::per_identity(std::vector<double>{6.4, -3.2});
  const auto t = per.t_vec(64.0);
  EXPECT_DOUBLE_EQ(t[0], 0.1);
  EXPECT_DOUBLE_EQ(t[1], -0.05);
}

TEST(StationaryB, KnownValues) {
  EXPECT_NEAR(stationary_b(2, 4.0).b, 0.0, 1e-15);
  EXPECT_NEAR(stationary_b(2, 37.0).t, 0.0, 1e-15);
  EXPECT_NEAR(stationary_b(8, 4.0).b, 0.993721564315286, 1e-13);
  EXPECT_NEAR(stationary_b(10, 4.0).b, 1.1230307138277985, 1e-13);
  EXPECT_NEAR(stationary_b(1000, 16.0).b, 3.4533791659915029, 1e-12);
  const auto s = stationary_b(8, 4.0);
  EXPECT_DOUBLE_EQ(s.t, s.b / 4.0);
}

TEST(StationaryB, RejectsBadInput) {
  EXPECT_THROW(stationary_b(1, 4.0), Error);
  EXPECT_THROW(stationary_b(8, 0.0), Error);
}

TEST(StationaryB, GradientVanishesAcrossSweep) {
  for (double n : {2.0, 3.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6}) {
    for (double gamma : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
      const auto s = stationary_b(n, gamma);
      if (n <= 64.0) {
        SimilarityRow row{1.0, std::vector<double>(static_cast<std::size_t>(n) - 1, -1.0)};
        const auto out = uss_loss(row, ThresholdParams::unified(s.b), cfg(gamma));
        EXPECT_LT(std::abs(out.d_b), 1e-12) << n << " " << gamma;
      }
      EXPECT_EQ(s.in_range, stationary_in_range_condition(n, gamma));
      EXPECT_EQ(s.in_range, std::abs(s.t) < 1.0);
    }
  }
}

TEST(StationaryB, RangeConditionBoundary) {
  EXPECT_TRUE(stationary_in_range_condition(10, 4.0));
  EXPECT_FALSE(stationary_in_range_condition(10, 1.0));
  EXPECT_FALSE(stationary_in_range_condition(1e6, 4.0));
  EXPECT_TRUE(stationary_in_range_condition(1e6, 16.0));
}

TEST(SoftmaxLoss, ScalarOracle) {
  EXPECT_NEAR(s2s_softmax_loss({1.0, {-1.0}}, cfg(1.0)).value, 0.12692801104297263, 1e-15);
}

TEST(SoftmaxLoss, UniformIsLogN) {
  EXPECT_NEAR(s2s_softmax_loss({0.3, {0.3, 0.3, 0.3, 0.3}}, cfg(64.0)).value, std::log(5.0),
              1e-14);
}

TEST(SoftmaxLoss, GradientSumsToZero) {
  Gen gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const SimilarityRow row = random_row(gen, gen.integer(1, 30));
    const auto out = s2s_softmax_loss(row, cfg(gen.uniform(1.0, 64.0), gen.uniform(0.0, 0.5)));
    double total = out.d_pos;
    for (double d : out.d_negs) total += d;
    EXPECT_NEAR(total, 0.0, 1e-10);
    EXPECT_EQ(out.d_b, 0.0);
  }
}

TEST(BceLoss, ScalarOracle) {
  const std::vector<int> neg_ids{1};
  const auto out = s2s_bce_loss({1.0, {-1.0}}, 0, neg_ids, ThresholdParams::per_identity(2),
                                cfg(1.0));
  EXPECT_NEAR(out.value, 0.6265233750364456, 1e-15);
}

TEST(BceLoss, EqualThresholdsReduceToUss) {
  Gen gen(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(2, 16);
    const SimilarityRow row = random_row(gen, n - 1);
    std::vector<int> neg_ids;
    for (int j = 1; j < n; ++j) neg_ids.push_back(j);
    const double b = gen.uniform(-30.0, 30.0);
    const LossConfig c = cfg(gen.uniform(1.0, 64.0), gen.coin() ? 0.1 : 0.0);
    const auto bce = s2s_bce_loss(row, 0, neg_ids, ThresholdParams::per_identity(n, b), c);
    const auto uss = uss_loss(row, ThresholdParams::unified(b), c);
    EXPECT_NEAR(bce.value, uss.value, 1e-15 * std::max(1.0, std::abs(uss.value)));
    double db = 0.0;
    for (double d : bce.d_b_vec) db += d;
    EXPECT_NEAR(db, uss.d_b, 1e-12);
  }
}

TEST(BceLoss, NegativeOnlyIdentityGradient) {
  const std::vector<int> neg_ids{2, 1};
  auto thr = ThresholdParams::per_identity(std::vector<double>{0.3, -0.4, 0.7});
  const SimilarityRow row{0.5, {0.2, -0.6}};
  const LossConfig c = cfg(4.0);
  const auto out = s2s_bce_loss(row, 0, neg_ids, thr, c);
  const double h = 1e-6;
  for (std::size_t k = 0; k < 3; ++k) {
    auto up = thr;
    auto down = thr;
    up.b_vec()[k] += h;
    down.b_vec()[k] -= h;
    const double fd = (s2s_bce_loss(row, 0, neg_ids, up, c).value -
                       s2s_bce_loss(row, 0, neg_ids, down, c).value) /
                      (2.0 * h);
    EXPECT_NEAR(out.d_b_vec[k], fd, 1e-7);
  }
  EXPECT_NEAR(out.d_b_vec[2], -1.0 / (1.0 + std::exp(-(4.0 * 0.2 - 0.7))), 1e-14);
}

TEST(BceLoss, IdMismatch) {
  const std::vector<int> too_few{};
  const std::vector<int> out_of_range{5};
  const auto thr = ThresholdParams::per_identity(2);
  EXPECT_THROW(s2s_bce_loss({1.0, {-1.0}}, 0, too_few, thr, cfg(1.0)), Error);
  try {
    s2s_bce_loss({1.0, {-1.0}}, 0, out_of_range, thr, cfg(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIdMismatch);
  }
}

TEST(SimilarityRowValidation, RejectsEmptyAndOutOfRange) {
  EXPECT_THROW((SimilarityRow{0.5, {}}.validate()), Error);
  EXPECT_THROW((SimilarityRow{1.5, {0.0}}.validate()), Error);
  EXPECT_NO_THROW((SimilarityRow{1.0, {-1.0}}.validate()));
}

TEST(RowOf, DiagonalIsPositive) {
  Matrix m(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = 0.1 * static_cast<double>(3 * i + j) - 0.4;
  const SimilarityRow row = row_of(m, 1);
  EXPECT_DOUBLE_EQ(row.pos, m(1, 1));
  ASSERT_EQ(row.negs.size(), 2u);
  EXPECT_DOUBLE_EQ(row.negs[0], m(1, 0));
  EXPECT_DOUBLE_EQ(row.negs[1], m(1, 2));
}

}  // namespace
}  // namespace uss
