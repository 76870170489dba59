#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "hlstm/matrix.h"

namespace hlstm {
namespace {

using boost::multiprecision::cpp_dec_float_50;

TEST(MaskedSoftmax, UniformOnEqualLogits) {
  const Vec p = masked_softmax(Vec{0.0, 0.0}, Mask{1, 1});
  EXPECT_EQ(p, (Vec{0.5, 0.5}));
}

TEST(MaskedSoftmax, SingleSurvivorTakesAllMass) {
  const Vec p = masked_softmax(Vec{5.0, -3.0}, Mask{1, 0});
  EXPECT_EQ(p, (Vec{1.0, 0.0}));
}

TEST(MaskedSoftmax, AllMaskedIsZero) {
  const Vec p = masked_softmax(Vec{1.0, 2.0, 3.0}, Mask{0, 0, 0});
  EXPECT_EQ(p, (Vec{0.0, 0.0, 0.0}));
}

TEST(MaskedSoftmax, MatchesFiftyDigitEvaluation) {
  const Vec logits{0.3, -1.2, 2.0};
  const Vec p = masked_softmax(logits, Mask{1, 1, 1});
  cpp_dec_float_50 total = 0;
  for (double x : logits) total += exp(cpp_dec_float_50(x));
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double expected = static_cast<double>(exp(cpp_dec_float_50(logits[j])) / total);
    EXPECT_NEAR(p[j], expected, 1e-16) << j;
  }
}

TEST(MaskedSoftmax, ShiftInvariantAndNormalized) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 9;
    Vec logits(n);
    Mask mask(n);
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = normal(rng);
      mask[j] = rng() % 3 != 0;
    }
    mask[rng() % n] = 1;
    const double shift = normal(rng) * 10.0;
    Vec shifted = logits;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[j]) shifted[j] += shift;
    }
    const Vec p = masked_softmax(logits, mask);
    const Vec q = masked_softmax(shifted, mask);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_GE(p[j], 0.0);
      if (!mask[j]) EXPECT_EQ(p[j], 0.0);
      EXPECT_NEAR(p[j], q[j], 1e-12);
      sum += p[j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(MaskedSoftmax, LargeLogitsStayFinite) {
  const Vec p = masked_softmax(Vec{1000.0, 999.0}, Mask{1, 1});
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(MaskedSoftmax, BackwardMatchesCentralDifferences) {
  const Vec logits{0.4, -0.7, 1.1, 0.0};
  const Mask mask{1, 1, 1, 0};
  const Vec upstream{0.3, -1.5, 0.8, 2.0};
  auto objective = [&](const Vec& s) {
    const Vec p = masked_softmax(s, mask);
    return dot(p, upstream);
  };
  const Vec grad = masked_softmax_backward(masked_softmax(logits, mask), upstream, mask);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    Vec plus = logits, minus = logits;
    plus[j] += 1e-6;
    minus[j] -= 1e-6;
    EXPECT_NEAR(grad[j], (objective(plus) - objective(minus)) / 2e-6, 1e-8) << j;
  }
  EXPECT_EQ(grad[3], 0.0);
}

TEST(Matrix, GemvAndOuterProducts) {
  const Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
  Vec y{1.0, 1.0};
  gemv_add(a, Vec{1, 0, -1}, y);
  EXPECT_EQ(y, (Vec{-1.0, -1.0}));

  Vec z(3, 0.0);
  gemv_transpose_add(a, Vec{1, 2}, z);
  EXPECT_EQ(z, (Vec{9, 12, 15}));

  Matrix b(2, 2);
  outer_add(b, Vec{1, 2}, Vec{3, 4});
  EXPECT_EQ(b, Matrix(2, 2, {3, 4, 6, 8}));

  Vec w{1, 1};
  axpy(2.0, Vec{1, -1}, w);
  EXPECT_EQ(w, (Vec{3, -1}));
}

TEST(Matrix, FrobeniusNormAndFiniteness) {
  Matrix m(2, 2, {3, 0, 0, 4});
  EXPECT_DOUBLE_EQ(m.frobenius_norm(), 5.0);
  EXPECT_TRUE(m.all_finite());
  m(0, 1) = std::nan("");
  EXPECT_FALSE(m.all_finite());
}

TEST(Sigmoid, ClosedForms) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(10.0), 0.9999546021312976, 1e-15);
  EXPECT_NEAR(sigmoid(-10.0), 1.0 - 0.9999546021312976, 1e-15);
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
}

}  // namespace
}  // namespace hlstm
