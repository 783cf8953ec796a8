#include "uss/optimizer.hpp"

#include <cmath>
#include <string>

#include "uss/error.hpp"

namespace uss {

void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, const SgdConfig& cfg,
              bool apply_weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw Error(ErrorCode::kShapeMismatch, "sgd_step: parameter, gradient and buffer sizes differ");
  }
  const double decay = apply_weight_decay ? cfg.weight_decay : 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = cfg.momentum * velocity[i] + grads[i] + decay * params[i];
    params[i] -= lr * velocity[i];
  }
}

std::span<double> OptimizerState::slot(std::size_t index, std::size_t size) {
  if (index >= buffers_.size()) buffers_.resize(index + 1);
  Vector& buf = buffers_[index];
  if (buf.empty()) buf.assign(size, 0.0);
  if (buf.size() != size) {
    throw Error(ErrorCode::kShapeMismatch, "momentum buffer " + std::to_string(index) +
                                               " has size " + std::to_string(buf.size()) +
                                               ", parameter has " + std::to_string(size));
  }
  return buf;
}

namespace {

struct LrVisitor {
  double step;
  double total;

  double operator()(const StepDecay& s) const {
    double lr = s.base;
    for (double milestone : s.milestones) {
      if (step >= milestone) lr /= s.factor;
    }
    return lr;
  }

  double operator()(const PolyDecay& s) const {
    return s.base * std::pow(1.0 - step / total, s.power);
  }

  double operator()(const WarmupPoly& s) const {
    if (step < s.warmup) return s.peak * step / s.warmup;
    const double span = total - s.warmup;
    if (span <= 0.0) return s.peak;
    return s.peak * std::pow(1.0 - (step - s.warmup) / span, s.power);
  }
};

void validate(const LrSchedule& schedule) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StepDecay>) {
          if (!(s.base >= 0.0) || !(s.factor > 0.0)) {
            throw Error(ErrorCode::kInvalidConfig, "step decay needs base >= 0, factor > 0");
          }
        } else if constexpr (std::is_same_v<T, PolyDecay>) {
          if (!(s.base >= 0.0) || !(s.power >= 0.0)) {
            throw Error(ErrorCode::kInvalidConfig, "poly decay needs base >= 0, power >= 0");
          }
        } else {
          if (!(s.peak >= 0.0) || !(s.warmup > 0.0) || !(s.power >= 0.0)) {
            throw Error(ErrorCode::kInvalidConfig,
                        "warmup poly needs peak >= 0, warmup > 0, power >= 0");
          }
        }
      },
      schedule);
}

}  // namespace

double lr_at(const LrSchedule& schedule, double step, double total) {
  validate(schedule);
  if (!(total > 0.0) || !(step >= 0.0) || step > total) {
    throw Error(ErrorCode::kInvalidConfig, "lr_at needs 0 <= step <= total and total > 0");
  }
  return std::visit(LrVisitor{step, total}, schedule);
}

}  // namespace uss
