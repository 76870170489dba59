#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hlstm {

using Vec = std::vector<double>;
using Mask = std::vector<std::uint8_t>;

// Dense row-major matrix of doubles. Column vectors are n x 1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double v);
  double frobenius_norm() const;
  void scale(double factor);
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// y += A x
void gemv_add(const Matrix& a, std::span<const double> x, std::span<double> y);
// y += A^T x
void gemv_transpose_add(const Matrix& a, std::span<const double> x, std::span<double> y);
// A += x y^T
void outer_add(Matrix& a, std::span<const double> x, std::span<const double> y);
// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);

double sigmoid(double x);

// Softmax restricted to positions where mask is non-zero. Masked positions
// get probability 0; an all-zero mask yields the all-zero vector.
Vec masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask);

// Given p = masked_softmax(s) and dL/dp, returns dL/ds (zero on masked cells).
Vec masked_softmax_backward(std::span<const double> probs,
                            std::span<const double> d_probs,
                            std::span<const std::uint8_t> mask);

}  // namespace hlstm
