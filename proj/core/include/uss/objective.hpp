#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "uss/numerics.hpp"
#include "uss/s2c_losses.hpp"
#include "uss/s2s_losses.hpp"

namespace uss {

enum class Preset {
  kNaive,
  kUss,
  kUssMargin,
  kSoftmax,
  kSoftmaxMargin,
  kBce,
  kBceMargin,
  kCosMargin,
  kArcMargin,
  kUniTS,
};

std::string_view preset_name(Preset preset);
std::optional<Preset> parse_preset(std::string_view name);
std::span<const Preset> all_presets();

enum class ThresholdUse { kNone, kUnified, kPerIdentity };

struct ObjectiveConfig {
  Preset preset = Preset::kUniTS;
  double gamma = 64.0;
  double margin = 0.1;  // s2s margin, used by the marginal presets and unitsface
  double s2c_scale = 64.0;
  double cos_margin = 0.35;
  double arc_margin = 0.5;

  /// Sample-to-sample settings with the margin resolved for the preset
  /// (zero for the vanilla presets).
  LossConfig s2s_config() const;
  S2CConfig s2c_config() const;
  ThresholdUse threshold_use() const;
  bool uses_s2s() const;
  bool uses_proxies() const;
  void validate() const;
};

// Loss of one pair batch and its gradients with respect to every input the
// trainer owns. Empty matrices / vectors stand for all-zero gradients.
struct BatchLossOutput {
  double value = 0.0;
  Matrix d_anchors;
  Matrix d_galleries;
  Matrix d_proxies;
  double d_b = 0.0;
  Vector d_b_vec;
};

/// anchors * galleries^T. For unit-norm rows these are cosine similarities.
Matrix similarity_matrix(const Matrix& anchors, const Matrix& galleries);

/// Mean of the per-anchor sample-to-sample loss over the batch. Row i uses
/// gallery i as the positive and the other galleries as negatives.
BatchLossOutput s2s_batch_loss(Preset preset, const LossConfig& cfg, const Matrix& anchors,
                               const Matrix& galleries, std::span<const int> identities,
                               const ThresholdParams& thresholds);

/// Mean sample-to-class loss over all anchors and galleries.
BatchLossOutput s2c_batch_loss(const S2CConfig& cfg, const Matrix& anchors,
                               const Matrix& galleries, std::span<const int> identities,
                               const ClassProxyMatrix& proxies);

/// (s2c + s2s) / 2, applied to the value and to every gradient, thresholds
/// included.
BatchLossOutput combined_loss(const BatchLossOutput& s2c, const BatchLossOutput& s2s);

BatchLossOutput evaluate_objective(const ObjectiveConfig& cfg, const Matrix& anchors,
                                   const Matrix& galleries, std::span<const int> identities,
                                   const ThresholdParams& thresholds,
                                   const ClassProxyMatrix* proxies);

}  // namespace uss
