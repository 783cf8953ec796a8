#include "uss/objective.hpp"

#include <array>
#include <string>

#include "uss/error.hpp"

namespace uss {
namespace {

constexpr std::array kPresets{
    Preset::kNaive,     Preset::kUss,       Preset::kUssMargin, Preset::kSoftmax,
    Preset::kSoftmaxMargin, Preset::kBce,   Preset::kBceMargin, Preset::kCosMargin,
    Preset::kArcMargin, Preset::kUniTS,
};

bool has_margin(Preset p) {
  return p == Preset::kUssMargin || p == Preset::kSoftmaxMargin || p == Preset::kBceMargin ||
         p == Preset::kUniTS;
}

void check_batch(const Matrix& anchors, const Matrix& galleries, std::span<const int> ids) {
  if (anchors.rows() != galleries.rows() || anchors.cols() != galleries.cols() ||
      anchors.rows() != ids.size()) {
    throw Error(ErrorCode::kShapeMismatch, "anchors, galleries and identities differ in size");
  }
  if (anchors.rows() < 2) {
    throw Error(ErrorCode::kInsufficientData, "a pair batch needs at least two identities");
  }
}

void add_scaled(Matrix& dst, const Matrix& src, double scale) {
  if (src.empty()) return;
  if (dst.empty()) dst = Matrix(src.rows(), src.cols());
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

void add_scaled(Vector& dst, const Vector& src, double scale) {
  if (src.empty()) return;
  if (dst.empty()) dst.assign(src.size(), 0.0);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace

std::string_view preset_name(Preset preset) {
  switch (preset) {
    case Preset::kNaive: return "naive";
    case Preset::kUss: return "uss";
    case Preset::kUssMargin: return "uss-m";
    case Preset::kSoftmax: return "soft";
    case Preset::kSoftmaxMargin: return "soft-m";
    case Preset::kBce: return "bce";
    case Preset::kBceMargin: return "bce-m";
    case Preset::kCosMargin: return "cos-margin";
    case Preset::kArcMargin: return "arc-margin";
    case Preset::kUniTS: return "unitsface";
  }
  return "unknown";
}

std::optional<Preset> parse_preset(std::string_view name) {
  for (Preset p : kPresets) {
    if (preset_name(p) == name) return p;
  }
  return std::nullopt;
}

std::span<const Preset> all_presets() { return kPresets; }

LossConfig ObjectiveConfig::s2s_config() const {
  return LossConfig{gamma, has_margin(preset) ? margin : 0.0};
}

S2CConfig ObjectiveConfig::s2c_config() const {
  switch (preset) {
    case Preset::kArcMargin: return S2CConfig{s2c_scale, arc_margin, MarginKind::kAngular};
    default: return S2CConfig{s2c_scale, cos_margin, MarginKind::kCosine};
  }
}

ThresholdUse ObjectiveConfig::threshold_use() const {
  switch (preset) {
    case Preset::kUss:
    case Preset::kUssMargin:
    case Preset::kUniTS: return ThresholdUse::kUnified;
    case Preset::kBce:
    case Preset::kBceMargin: return ThresholdUse::kPerIdentity;
    default: return ThresholdUse::kNone;
  }
}

bool ObjectiveConfig::uses_s2s() const {
  return preset != Preset::kCosMargin && preset != Preset::kArcMargin;
}

bool ObjectiveConfig::uses_proxies() const {
  return preset == Preset::kCosMargin || preset == Preset::kArcMargin || preset == Preset::kUniTS;
}

void ObjectiveConfig::validate() const {
  LossConfig{gamma, margin}.validate();
  S2CConfig{s2c_scale, cos_margin, MarginKind::kCosine}.validate();
  S2CConfig{s2c_scale, arc_margin, MarginKind::kAngular}.validate();
}

Matrix similarity_matrix(const Matrix& anchors, const Matrix& galleries) {
  if (anchors.cols() != galleries.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "anchor and gallery dimensions differ");
  }
  Matrix s(anchors.rows(), galleries.rows());
  for (std::size_t i = 0; i < anchors.rows(); ++i) {
    for (std::size_t j = 0; j < galleries.rows(); ++j) {
      s(i, j) = dot(anchors.row(i), galleries.row(j));
    }
  }
  return s;
}

BatchLossOutput s2s_batch_loss(Preset preset, const LossConfig& cfg, const Matrix& anchors,
                               const Matrix& galleries, std::span<const int> identities,
                               const ThresholdParams& thresholds) {
  check_batch(anchors, galleries, identities);
  const std::size_t p = anchors.rows();
  const double inv = 1.0 / static_cast<double>(p);
  const Matrix sims = similarity_matrix(anchors, galleries);
  Matrix d_sims(p, p);

  BatchLossOutput out;
  if (thresholds.mode() == ThresholdParams::Mode::kPerIdentity) {
    out.d_b_vec.assign(thresholds.b_vec().size(), 0.0);
  }
  std::vector<int> neg_ids;
  for (std::size_t i = 0; i < p; ++i) {
    const SimilarityRow row = row_of(sims, i);
    LossOutput loss;
    switch (preset) {
      case Preset::kNaive: loss = naive_loss(row, cfg); break;
      case Preset::kUss:
      case Preset::kUssMargin:
      case Preset::kUniTS: loss = uss_loss(row, thresholds, cfg); break;
      case Preset::kSoftmax:
      case Preset::kSoftmaxMargin: loss = s2s_softmax_loss(row, cfg); break;
      case Preset::kBce:
      case Preset::kBceMargin: {
        neg_ids.clear();
        for (std::size_t j = 0; j < p; ++j) {
          if (j != i) neg_ids.push_back(identities[j]);
        }
        loss = s2s_bce_loss(row, identities[i], neg_ids, thresholds, cfg);
        break;
      }
      case Preset::kCosMargin:
      case Preset::kArcMargin:
        throw Error(ErrorCode::kInvalidConfig,
                    std::string(preset_name(preset)) + " has no sample-to-sample part");
    }
    out.value += inv * loss.value;
    out.d_b += inv * loss.d_b;
    add_scaled(out.d_b_vec, loss.d_b_vec, inv);
    d_sims(i, i) = inv * loss.d_pos;
    for (std::size_t j = 0, k = 0; j < p; ++j) {
      if (j != i) d_sims(i, j) = inv * loss.d_negs[k++];
    }
  }

  const std::size_t d = anchors.cols();
  out.d_anchors = Matrix(p, d);
  out.d_galleries = Matrix(p, d);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double w = d_sims(i, j);
      auto da = out.d_anchors.row(i);
      auto dg = out.d_galleries.row(j);
      const auto a = anchors.row(i);
      const auto g = galleries.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        da[k] += w * g[k];
        dg[k] += w * a[k];
      }
    }
  }
  return out;
}

BatchLossOutput s2c_batch_loss(const S2CConfig& cfg, const Matrix& anchors,
                               const Matrix& galleries, std::span<const int> identities,
                               const ClassProxyMatrix& proxies) {
  check_batch(anchors, galleries, identities);
  const std::size_t p = anchors.rows();
  const double inv = 1.0 / static_cast<double>(2 * p);
  BatchLossOutput out;
  out.d_anchors = Matrix(p, anchors.cols());
  out.d_galleries = Matrix(p, anchors.cols());
  out.d_proxies = Matrix(proxies.identities(), proxies.dim());
  for (const auto* side : {&anchors, &galleries}) {
    Matrix& grad = side == &anchors ? out.d_anchors : out.d_galleries;
    for (std::size_t i = 0; i < p; ++i) {
      const S2CLossOutput loss = s2c_loss(side->row(i), proxies, identities[i], cfg);
      out.value += inv * loss.value;
      auto dx = grad.row(i);
      for (std::size_t k = 0; k < dx.size(); ++k) dx[k] = inv * loss.d_x[k];
      add_scaled(out.d_proxies, loss.d_proxies, inv);
    }
  }
  return out;
}

BatchLossOutput combined_loss(const BatchLossOutput& s2c, const BatchLossOutput& s2s) {
  BatchLossOutput out;
  out.value = 0.5 * (s2c.value + s2s.value);
  for (const BatchLossOutput* part : {&s2c, &s2s}) {
    add_scaled(out.d_anchors, part->d_anchors, 0.5);
    add_scaled(out.d_galleries, part->d_galleries, 0.5);
    add_scaled(out.d_proxies, part->d_proxies, 0.5);
    add_scaled(out.d_b_vec, part->d_b_vec, 0.5);
    out.d_b += 0.5 * part->d_b;
  }
  return out;
}

BatchLossOutput evaluate_objective(const ObjectiveConfig& cfg, const Matrix& anchors,
                                   const Matrix& galleries, std::span<const int> identities,
                                   const ThresholdParams& thresholds,
                                   const ClassProxyMatrix* proxies) {
  if (cfg.uses_proxies() && proxies == nullptr) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string(preset_name(cfg.preset)) + " needs class proxies");
  }
  switch (cfg.preset) {
    case Preset::kCosMargin:
    case Preset::kArcMargin:
      return s2c_batch_loss(cfg.s2c_config(), anchors, galleries, identities, *proxies);
    case Preset::kUniTS:
      return combined_loss(
          s2c_batch_loss(cfg.s2c_config(), anchors, galleries, identities, *proxies),
          s2s_batch_loss(cfg.preset, cfg.s2s_config(), anchors, galleries, identities,
                         thresholds));
    default:
      return s2s_batch_loss(cfg.preset, cfg.s2s_config(), anchors, galleries, identities,
                            thresholds);
  }
}

}  // namespace uss
