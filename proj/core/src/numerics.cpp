#include "uss/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uss/error.hpp"

namespace uss {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kIdMismatch: return "IdMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kStaleCache: return "StaleCache";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kInsufficientPairs: return "InsufficientPairs";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  }
  if (values.size() != cols_) {
    throw Error(ErrorCode::kShapeMismatch,
                "row of length " + std::to_string(values.size()) +
                    " appended to matrix with " + std::to_string(cols_) + " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

SimilarityScore::SimilarityScore(double value) : value_(std::clamp(value, -1.0, 1.0)) {}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector l2_normalize(std::span<const double> v) {
  const double norm = l2_norm(v);
  if (!(norm >= 1e-30)) {
    throw Error(ErrorCode::kZeroNorm, "cannot normalize a vector of norm " + std::to_string(norm));
  }
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

SimilarityScore cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double ab = dot(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na >= 1e-30) || !(nb >= 1e-30)) {
    throw Error(ErrorCode::kZeroNorm, "cosine similarity of a zero vector");
  }
  return SimilarityScore(ab / (na * nb));
}

double softplus(double x) noexcept {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  if (x < -30.0) return std::log1p(std::exp(x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(xs.begin(), xs.end());
  CompensatedSum acc;
  for (double x : xs) acc.add(std::exp(x - peak));
  return peak + std::log(acc.value());
}

bool all_finite(std::span<const double> xs) noexcept {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace uss
