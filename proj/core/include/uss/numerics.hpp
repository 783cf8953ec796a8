#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uss {

using Vector = std::vector<double>;

// Dense row-major matrix. Batches of embeddings are stored one sample per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void append_row(std::span<const double> values);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Cosine similarity in [-1, 1]. Construction clamps values that overshoot the
// range by rounding.
class SimilarityScore {
 public:
  explicit SimilarityScore(double value);
  double value() const noexcept { return value_; }
  operator double() const noexcept { return value_; }

 private:
  double value_;
};

// Neumaier compensated summation. Long reductions (a million negatives in the
// stationarity sweep) stay accurate to a few ulps of the result.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Unit-norm copy of `v`. Throws ZeroNorm when the norm is below 1e-30.
[[nodiscard]] Vector l2_normalize(std::span<const double> v);

/// <a,b> / (|a||b|), clamped to [-1, 1].
SimilarityScore cosine_similarity(std::span<const double> a, std::span<const double> b);

/// log(1 + e^x) without overflow for any finite x.
double softplus(double x) noexcept;

/// 1 / (1 + e^-x); the derivative of softplus.
double sigmoid(double x) noexcept;

double log_sum_exp(std::span<const double> xs);

bool all_finite(std::span<const double> xs) noexcept;

}  // namespace uss
