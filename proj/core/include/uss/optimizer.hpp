#pragma once

#include <span>
#include <variant>
#include <vector>

#include "uss/numerics.hpp"

namespace uss {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

/// v <- momentum*v + grad + weight_decay*param;  param <- param - lr*v.
/// `apply_weight_decay = false` is used for threshold offsets.
void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, const SgdConfig& cfg,
              bool apply_weight_decay = true);

// Momentum buffers addressed by slot; a slot is created zero-filled on first use
// and must keep its size afterwards.
class OptimizerState {
 public:
  std::span<double> slot(std::size_t index, std::size_t size);
  const std::vector<Vector>& buffers() const noexcept { return buffers_; }
  std::vector<Vector>& buffers() noexcept { return buffers_; }

  bool operator==(const OptimizerState&) const = default;

 private:
  std::vector<Vector> buffers_;
};

struct StepDecay {
  double base = 0.1;
  std::vector<double> milestones{16.0, 24.0};
  double factor = 10.0;
};

struct PolyDecay {
  double base = 0.1;
  double power = 2.0;
};

struct WarmupPoly {
  double peak = 0.4;
  double warmup = 1.0;
  double power = 2.0;
};

using LrSchedule = std::variant<StepDecay, PolyDecay, WarmupPoly>;

/// Learning rate at `step` of `total` (any consistent unit; the trainer uses
/// fractional epochs). Milestones and warmup length are in the same unit.
double lr_at(const LrSchedule& schedule, double step, double total);

}  // namespace uss
