#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hlstm/baseline.h"
#include "hlstm/error.h"

namespace hlstm {
namespace {

Dataset docs(std::initializer_list<std::pair<const char*, int>> items) {
  Dataset ds;
  int i = 0;
  for (const auto& [body, label] : items) {
    ds.emails.push_back({.id = "d" + std::to_string(i++), .body = body, .label = label});
  }
  return ds;
}

double row_norm(const FeatureMatrix& f, std::size_t r) {
  double s = 0.0;
  for (double x : f.values.row(r)) s += x * x;
  return std::sqrt(s);
}

TEST(Tfidf, IdfIsOneWhenEveryDocumentHasTheWord) {
  const Dataset ds = docs({{"alpha beta", 0}, {"alpha", 1}, {"alpha gamma", 0}});
  const Vocabulary vocab({"alpha", "beta", "gamma"});
  const auto v = TfidfVectorizer::fit(ds, vocab);
  EXPECT_DOUBLE_EQ(v.idf()[0], 1.0);
  EXPECT_DOUBLE_EQ(v.idf()[1], std::log(4.0 / 2.0) + 1.0);
}

TEST(Tfidf, SingleWordRowIsOneHot) {
  const Dataset ds = docs({{"alpha alpha", 0}, {"beta", 1}});
  const auto f = tfidf_features(ds, Vocabulary({"alpha", "beta"}));
  EXPECT_DOUBLE_EQ(f.values(0, 0), 1.0);
  EXPECT_EQ(f.values(0, 1), 0.0);
  EXPECT_EQ(f.values(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(f.values(1, 1), 1.0);
}

TEST(Tfidf, HandComputedTable) {
  const Dataset ds = docs({{"a b b", 0}, {"b c", 1}, {"c c c", 0}});
  const Vocabulary vocab({"a", "b", "c"});
  const auto f = tfidf_features(ds, vocab);
  const double idf_a = std::log(4.0 / 2.0) + 1.0;
  const double idf_bc = std::log(4.0 / 3.0) + 1.0;
  const double r0[] = {1 * idf_a, 2 * idf_bc, 0.0};
  const double r1[] = {0.0, idf_bc, idf_bc};
  const double n0 = std::sqrt(r0[0] * r0[0] + r0[1] * r0[1]);
  const double n1 = std::sqrt(2.0) * idf_bc;
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(f.values(0, c), r0[c] / n0, 1e-12);
    EXPECT_NEAR(f.values(1, c), r1[c] / n1, 1e-12);
  }
  EXPECT_NEAR(f.values(2, 2), 1.0, 1e-12);
}

TEST(Tfidf, RowsHaveUnitNormOrAreZero) {
  const Dataset ds = docs({{"one two three two", 0}, {"four five", 1}, {"zzz", 0}});
  const auto f = tfidf_features(ds, Vocabulary({"one", "two", "three", "four", "five"}));
  EXPECT_NEAR(row_norm(f, 0), 1.0, 1e-12);
  EXPECT_NEAR(row_norm(f, 1), 1.0, 1e-12);
  EXPECT_EQ(row_norm(f, 2), 0.0);
}

TEST(Tfidf, TransformUsesFittedIdf) {
  const Dataset train = docs({{"a b", 0}, {"a", 1}});
  const Dataset test = docs({{"b", 0}});
  const auto v = TfidfVectorizer::fit(train, Vocabulary({"a", "b"}));
  const auto f = v.transform(test);
  EXPECT_EQ(f.values(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(f.values(0, 1), 1.0);
}

Embeddings tiny_embeddings() {
  Embeddings e;
  e.dim = 2;
  e.vectors["cat"] = {1.0, 2.0};
  e.vectors["dog"] = {3.0, -2.0};
  return e;
}

TEST(EmbedMean, Averages) {
  const Dataset ds = docs({{"cat", 0}, {"cat dog bird", 1}, {"bird fish", 0}});
  const auto f = embed_mean_features(ds, tiny_embeddings());
  ASSERT_EQ(f.cols(), 2u);
  EXPECT_EQ(f.values(0, 0), 1.0);
  EXPECT_EQ(f.values(0, 1), 2.0);
  EXPECT_EQ(f.values(1, 0), 2.0);
  EXPECT_EQ(f.values(1, 1), 0.0);
  EXPECT_EQ(f.values(2, 0), 0.0);
  EXPECT_EQ(f.values(2, 1), 0.0);
}

TEST(Concat, WidthsAndValues) {
  const Dataset ds = docs({{"cat a", 0}, {"dog b", 1}});
  const auto t = tfidf_features(ds, Vocabulary({"a", "b", "cat"}));
  const auto e = embed_mean_features(ds, tiny_embeddings());
  const auto c = concat_features(t, e);
  ASSERT_EQ(c.cols(), t.cols() + e.cols());
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < t.cols(); ++j) EXPECT_EQ(c.values(r, j), t.values(r, j));
    for (std::size_t j = 0; j < e.cols(); ++j) EXPECT_EQ(c.values(r, t.cols() + j), e.values(r, j));
  }
  const auto shorter = embed_mean_features(docs({{"cat", 0}}), tiny_embeddings());
  EXPECT_THROW(concat_features(t, shorter), ConfigError);
}

TEST(FeaturesCsv, Layout) {
  FeatureMatrix f{FeatureKind::kTfidf, Matrix(2, 2)};
  f.values(0, 0) = 0.5;
  f.values(1, 1) = 1.0;
  std::ostringstream out;
  write_features_csv(f, out);
  EXPECT_EQ(out.str(), "f0,f1\n0.5,0\n0,1\n");
}

FeatureMatrix blobs(std::size_t n, std::uint64_t seed, std::vector<int>& labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  FeatureMatrix f{FeatureKind::kTfidf, Matrix(n, 2)};
  labels.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    labels[r] = static_cast<int>(r % 2);
    const double centre = labels[r] ? 2.0 : -2.0;
    f.values(r, 0) = centre + noise(rng);
    f.values(r, 1) = centre + noise(rng);
  }
  return f;
}

TEST(Svm, TwoPoints) {
  FeatureMatrix f{FeatureKind::kTfidf, Matrix(2, 1)};
  f.values(0, 0) = -1.0;
  f.values(1, 0) = 1.0;
  const std::vector<int> y{0, 1};
  const auto result = svm_train(f, y, {.C = 10.0, .iterations = 20000, .seed = 3});
  EXPECT_EQ(svm_predict(result.model, f), y);
  // The optimum has w = 1 and b = 0 (both margins exactly 1).
  EXPECT_NEAR(result.model.weights[0], 1.0, 0.05);
  EXPECT_NEAR(result.model.bias, 0.0, 0.05);
}

TEST(Svm, SeparatesBlobs) {
  std::vector<int> y;
  const auto f = blobs(100, 5, y);
  const auto result = svm_train(f, y, {.C = 1.0, .iterations = 20000, .seed = 1});
  EXPECT_EQ(svm_predict(result.model, f), y);
}

TEST(Svm, DuplicatedDataKeepsPredictions) {
  std::vector<int> y;
  const auto f = blobs(60, 9, y);
  FeatureMatrix twice{FeatureKind::kTfidf, Matrix(120, 2)};
  std::vector<int> y2;
  for (std::size_t r = 0; r < 120; ++r) {
    twice.values(r, 0) = f.values(r % 60, 0);
    twice.values(r, 1) = f.values(r % 60, 1);
    y2.push_back(y[r % 60]);
  }
  const auto a = svm_train(f, y, {.C = 1.0, .iterations = 20000, .seed = 2});
  const auto b = svm_train(twice, y2, {.C = 0.5, .iterations = 20000, .seed = 2});
  EXPECT_EQ(svm_predict(a.model, f), svm_predict(b.model, f));
}

TEST(Svm, ObjectiveTraceSettles) {
  std::vector<int> y;
  const auto f = blobs(80, 12, y);
  const auto result =
      svm_train(f, y, {.C = 1.0, .iterations = 40000, .seed = 4, .trace_every = 4000});
  ASSERT_EQ(result.objective_trace.size(), 10u);
  // Stochastic steps are not monotone individually; the averaged iterate
  // must still end well below where it started.
  EXPECT_LT(result.objective_trace.back(), result.objective_trace.front());
  EXPECT_LE(result.objective_trace.back(), result.objective_trace[4] + 1e-6);
}

TEST(Svm, RejectsBadInput) {
  std::vector<int> y;
  const auto f = blobs(10, 1, y);
  EXPECT_THROW(svm_train(f, std::vector<int>(10, 1)), ConfigError);
  EXPECT_THROW(svm_train(f, std::vector<int>(9, 0)), ConfigError);
  EXPECT_THROW(svm_train(f, y, {.C = 0.0}), ConfigError);
}

}  // namespace
}  // namespace hlstm
