#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "uss/error.hpp"
#include "uss/objective.hpp"
#include "uss/s2c_losses.hpp"

namespace uss {
namespace {

using testing::Gen;

S2CConfig s2c(MarginKind kind, double margin, double scale = 64.0) {
  S2CConfig c;
  c.kind = kind;
  c.margin = margin;
  c.scale = scale;
  return c;
}

ClassProxyMatrix axis_proxies() {
  Matrix m(2, 2);
  m(0, 0) = 1.0;
  m(1, 0) = -1.0;
  return ClassProxyMatrix(m);
}

TEST(S2CLogits, CosineMarginTarget) {
  const auto out = s2c_logits(Vector{1.0, 0.0}, axis_proxies(), 0, s2c(MarginKind::kCosine, 0.35));
  EXPECT_NEAR(out.logits[0], 41.6, 1e-12);
  EXPECT_NEAR(out.logits[1], -64.0, 1e-12);
}

TEST(S2CLogits, AngularMarginTarget) {
  const auto out =
      s2c_logits(Vector{1.0, 0.0}, axis_proxies(), 0, s2c(MarginKind::kAngular, 0.5));
  EXPECT_NEAR(out.logits[0], 56.165283960983854, 1e-12);
}

TEST(S2CLogits, ZeroMarginKindsCoincide) {
  Gen gen(2);
  const ClassProxyMatrix proxies(gen.unit_rows(5, 6));
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = gen.unit_vector(6);
    const auto plain = s2c_logits(x, proxies, 2, s2c(MarginKind::kPlain, 0.0));
    const auto cosine = s2c_logits(x, proxies, 2, s2c(MarginKind::kCosine, 0.0));
    const auto angular = s2c_logits(x, proxies, 2, s2c(MarginKind::kAngular, 0.0));
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_NEAR(plain.logits[j], cosine.logits[j], 1e-12);
      EXPECT_NEAR(plain.logits[j], angular.logits[j], 1e-12);
    }
  }
}

TEST(S2CLogits, TargetNonIncreasingInMargin) {
  Gen gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const ClassProxyMatrix proxies(gen.unit_rows(3, 4));
    const Vector x = gen.unit_vector(4);
    for (MarginKind kind : {MarginKind::kCosine, MarginKind::kAngular}) {
      double previous = std::numeric_limits<double>::infinity();
      for (double m = 0.0; m < 1.5; m += 0.1) {
        const double target = s2c_logits(x, proxies, 0, s2c(kind, m)).logits[0];
        EXPECT_LE(target, previous + 1e-12);
        previous = target;
      }
    }
  }
}

TEST(S2CLoss, UniformIsLogN) {
  Matrix m(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  m(2, 2) = 1.0;
  const Vector x = l2_normalize(Vector{1.0, 1.0, 1.0});
  const auto out = s2c_loss(x, ClassProxyMatrix(m), 1, s2c(MarginKind::kPlain, 0.0));
  EXPECT_NEAR(out.value, std::log(3.0), 1e-12);
}

TEST(S2CLoss, ScalarOracle) {
  const auto out =
      s2c_loss(Vector{1.0, 0.0}, axis_proxies(), 0, s2c(MarginKind::kPlain, 0.0, 1.0));
  EXPECT_NEAR(out.value, 0.12692801104297263, 1e-15);
}

TEST(S2CLoss, GradientMatchesFiniteDifference) {
  Gen gen(6);
  const double h = 1e-6;
  for (MarginKind kind : {MarginKind::kPlain, MarginKind::kCosine, MarginKind::kAngular}) {
    for (int trial = 0; trial < 20; ++trial) {
      const ClassProxyMatrix proxies(gen.unit_rows(4, 5));
      const Vector x = gen.unit_vector(5);
      const S2CConfig c = s2c(kind, 0.3, 8.0);
      const double cos_y = dot(x, proxies.weights().row(1));
      if (kind == MarginKind::kAngular && std::abs(cos_y - std::cos(std::numbers::pi - 0.3)) < 1e-3)
        continue;
      const auto out = s2c_loss(x, proxies, 1, c);
      for (std::size_t k = 0; k < x.size(); ++k) {
        Vector up = x;
        Vector down = x;
        up[k] += h;
        down[k] -= h;
        const double fd =
            (s2c_loss(up, proxies, 1, c).value - s2c_loss(down, proxies, 1, c).value) / (2 * h);
        EXPECT_LT(std::abs(out.d_x[k] - fd) / std::max({1.0, std::abs(fd), std::abs(out.d_x[k])}),
                  1e-5);
      }
    }
  }
}

TEST(S2CLoss, EqualsSoftmaxWhenProxiesAreGalleries) {
  Gen gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(2, 10));
    const Matrix galleries = gen.unit_rows(n, 6);
    const ClassProxyMatrix proxies(galleries);
    const Vector x = gen.unit_vector(6);
    const double gamma = gen.uniform(1.0, 64.0);
    const auto label = static_cast<std::size_t>(gen.integer(0, static_cast<int>(n) - 1));
    SimilarityRow row;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = dot(x, proxies.weights().row(j));
      if (j == label) row.pos = s; else row.negs.push_back(s);
    }
    EXPECT_NEAR(s2c_loss(x, proxies, static_cast<int>(label), s2c(MarginKind::kPlain, 0.0, gamma)).value,
                s2s_softmax_loss(row, LossConfig{gamma, 0.0}).value, 1e-12);
  }
}

TEST(Proxies, ClassMeansAreUnitNorm) {
  SyntheticConfig sc;
  sc.identities = 5;
  sc.samples_per_identity = 4;
  sc.dim = 7;
  const IdentityDataset ds = generate_synthetic(sc);
  const auto proxies = ClassProxyMatrix::from_class_means(ds.features, ds.labels, 5);
  EXPECT_EQ(proxies.identities(), 5u);
  EXPECT_LT(proxies.max_norm_deviation(), 1e-12);
  const auto random = ClassProxyMatrix::random(5, 7, 3);
  EXPECT_LT(random.max_norm_deviation(), 1e-12);
  EXPECT_EQ(random, ClassProxyMatrix::random(5, 7, 3));
}

TEST(S2CConfigValidation, AngularMarginRange) {
  EXPECT_THROW(s2c(MarginKind::kAngular, 1.6).validate(), Error);
  EXPECT_THROW(s2c(MarginKind::kCosine, -0.1).validate(), Error);
  EXPECT_THROW(s2c(MarginKind::kCosine, 0.1, 0.0).validate(), Error);
}

BatchLossOutput make_part(double value, double fill, double b) {
  BatchLossOutput out;
  out.value = value;
  out.d_anchors = Matrix(2, 3, fill);
  out.d_galleries = Matrix(2, 3, -fill);
  out.d_b = b;
  return out;
}

TEST(Combined, IsAnAverage) {
  const auto mixed = combined_loss(make_part(3.0, 1.0, 0.0), make_part(1.0, 3.0, 0.8));
  EXPECT_DOUBLE_EQ(mixed.value, 2.0);
  EXPECT_DOUBLE_EQ(mixed.d_anchors(1, 2), 2.0);
  EXPECT_DOUBLE_EQ(mixed.d_galleries(0, 0), -2.0);
  EXPECT_DOUBLE_EQ(mixed.d_b, 0.4);
  const auto same = combined_loss(make_part(1.5, 0.5, 0.2), make_part(1.5, 0.5, 0.2));
  EXPECT_DOUBLE_EQ(same.value, 1.5);
}

TEST(Objective, PresetNamesRoundTrip) {
  for (Preset p : all_presets()) {
    const auto parsed = parse_preset(preset_name(p));
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(*parsed, p);
  }
  EXPECT_EQ(all_presets().size(), 10u);
  EXPECT_FALSE(parse_preset("arcface").has_value());
  EXPECT_EQ(preset_name(Preset::kUniTS), "unitsface");
}

TEST(Objective, ThresholdUsePerPreset) {
  ObjectiveConfig c;
  c.preset = Preset::kUss;
  EXPECT_EQ(c.threshold_use(), ThresholdUse::kUnified);
  EXPECT_EQ(c.s2s_config().margin, 0.0);
  c.preset = Preset::kUssMargin;
  EXPECT_EQ(c.s2s_config().margin, 0.1);
  c.preset = Preset::kBce;
  EXPECT_EQ(c.threshold_use(), ThresholdUse::kPerIdentity);
  c.preset = Preset::kCosMargin;
  EXPECT_EQ(c.threshold_use(), ThresholdUse::kNone);
  EXPECT_TRUE(c.uses_proxies());
  EXPECT_FALSE(c.uses_s2s());
  c.preset = Preset::kUniTS;
  EXPECT_TRUE(c.uses_proxies());
  EXPECT_TRUE(c.uses_s2s());
  EXPECT_EQ(c.threshold_use(), ThresholdUse::kUnified);
}

TEST(Objective, CombinedGradientMatchesFiniteDifference) {
  Gen gen(12);
  ObjectiveConfig c;
  c.preset = Preset::kUniTS;
  c.gamma = 4.0;
  c.s2c_scale = 4.0;
  const Matrix anchors = gen.unit_rows(3, 4);
  const Matrix galleries = gen.unit_rows(3, 4);
  const std::vector<int> ids{0, 2, 1};
  const ClassProxyMatrix proxies(gen.unit_rows(3, 4));
  const auto thr = ThresholdParams::unified(0.3);
  const auto out = evaluate_objective(c, anchors, galleries, ids, thr, &proxies);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      Matrix up = anchors;
      Matrix down = anchors;
      up(i, k) += h;
      down(i, k) -= h;
      const double fd = (evaluate_objective(c, up, galleries, ids, thr, &proxies).value -
                         evaluate_objective(c, down, galleries, ids, thr, &proxies).value) /
                        (2 * h);
      EXPECT_NEAR(out.d_anchors(i, k), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
  auto up = thr;
  auto down = thr;
  up.b() += h;
  down.b() -= h;
  const double fd_b = (evaluate_objective(c, anchors, galleries, ids, up, &proxies).value -
                       evaluate_objective(c, anchors, galleries, ids, down, &proxies).value) /
                      (2 * h);
  EXPECT_NEAR(out.d_b, fd_b, 1e-7);
  const auto s2s = s2s_batch_loss(Preset::kUssMargin, c.s2s_config(), anchors, galleries, ids, thr);
  EXPECT_NEAR(out.d_b, s2s.d_b / 2.0, 1e-15);
}

TEST(Objective, SimilarityMatrixIsProduct) {
  Gen gen(14);
  const Matrix a = gen.unit_rows(3, 5);
  const Matrix g = gen.unit_rows(3, 5);
  const Matrix s = similarity_matrix(a, g);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s(i, j), dot(a.row(i), g.row(j)), 1e-15);
}

}  // namespace
}  // namespace uss
