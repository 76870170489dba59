#include "hlstm/matrix.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "hlstm/error.h"

namespace hlstm {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InternalError("Matrix: value count does not match shape");
  }
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

double Matrix::frobenius_norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

void Matrix::scale(double factor) {
  for (double& v : values_) v *= factor;
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void gemv_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols() || y.size() != a.rows()) {
    throw InternalError("gemv_add: dimension mismatch");
  }
  const std::size_t n = a.cols();
  const double* p = a.values().data();
  for (std::size_t r = 0; r < a.rows(); ++r, p += n) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += p[c] * x[c];
    y[r] += acc;
  }
}

void gemv_transpose_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.rows() || y.size() != a.cols()) {
    throw InternalError("gemv_transpose_add: dimension mismatch");
  }
  const std::size_t n = a.cols();
  const double* p = a.values().data();
  for (std::size_t r = 0; r < a.rows(); ++r, p += n) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < n; ++c) y[c] += p[c] * xr;
  }
}

void outer_add(Matrix& a, std::span<const double> x, std::span<const double> y) {
  if (x.size() != a.rows() || y.size() != a.cols()) {
    throw InternalError("outer_add: dimension mismatch");
  }
  const std::size_t n = a.cols();
  double* p = a.values().data();
  for (std::size_t r = 0; r < a.rows(); ++r, p += n) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < n; ++c) p[c] += xr * y[c];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw InternalError("axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InternalError("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) {
    throw InternalError("masked_softmax: logits and mask differ in length");
  }
  Vec out(logits.size(), 0.0);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (mask[j]) max_logit = std::max(max_logit, logits[j]);
  }
  if (!std::isfinite(max_logit)) return out;

  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!mask[j]) continue;
    out[j] = std::exp(logits[j] - max_logit);
    total += out[j];
  }
  for (double& v : out) v /= total;
  return out;
}

Vec masked_softmax_backward(std::span<const double> probs,
                            std::span<const double> d_probs,
                            std::span<const std::uint8_t> mask) {
  if (probs.size() != d_probs.size() || probs.size() != mask.size()) {
    throw InternalError("masked_softmax_backward: length mismatch");
  }
  double weighted = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (mask[j]) weighted += probs[j] * d_probs[j];
  }
  Vec d_logits(probs.size(), 0.0);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (mask[j]) d_logits[j] = probs[j] * (d_probs[j] - weighted);
  }
  return d_logits;
}

}  // namespace hlstm
