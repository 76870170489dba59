#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "hlstm/corpus.h"
#include "hlstm/embeddings.h"
#include "hlstm/matrix.h"
#include "hlstm/textprep.h"

namespace hlstm {

enum class FeatureKind { kTfidf, kEmbedMean, kConcat };

struct FeatureMatrix {
  FeatureKind kind = FeatureKind::kTfidf;
  Matrix values;  // one row per email

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

// tf-idf over the regular vocabulary tokens: tf is the raw count in the
// email (body and header), idf = ln((1 + N) / (1 + df)) + 1 with N and df
// taken from the fitting set, rows L2-normalized.
class TfidfVectorizer {
 public:
  static TfidfVectorizer fit(const Dataset& train, const Vocabulary& vocab);

  FeatureMatrix transform(const Dataset& dataset) const;
  const Vec& idf() const { return idf_; }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  Vocabulary vocab_;
  Vec idf_;  // per regular token
};

// Fits and transforms the same dataset.
FeatureMatrix tfidf_features(const Dataset& dataset, const Vocabulary& vocab);

// Mean of the vectors of every token found in `embeddings`; zero row when
// none is found.
FeatureMatrix embed_mean_features(const Dataset& dataset, const Embeddings& embeddings);

// Horizontal concatenation; both inputs must have the same row count.
FeatureMatrix concat_features(const FeatureMatrix& left, const FeatureMatrix& right);

void write_features_csv(const FeatureMatrix& features, std::ostream& out);

struct LinearSvmModel {
  Vec weights;
  double bias = 0.0;
  double C = 10.0;
};

struct SvmOptions {
  double C = 10.0;
  std::size_t iterations = 100000;
  std::uint64_t seed = 0;
  // When non-zero, the objective of the averaged iterate is recorded every
  // `trace_every` iterations.
  std::size_t trace_every = 0;
};

struct SvmTrainResult {
  LinearSvmModel model;
  std::vector<double> objective_trace;
};

// Minimizes 1/2 (|w|^2 + b^2) + C * sum_i hinge(y_i (w.x_i + b)) with
// y in {-1, +1} by seeded stochastic subgradient steps (step 1/(lambda t),
// lambda = 1/(C n)) and returns the averaged iterate.
SvmTrainResult svm_train(const FeatureMatrix& features, std::span<const int> labels,
                         const SvmOptions& options = {});

double svm_decision(const LinearSvmModel& model, std::span<const double> x);
std::vector<int> svm_predict(const LinearSvmModel& model, const FeatureMatrix& features);
double svm_objective(const LinearSvmModel& model, const FeatureMatrix& features,
                     std::span<const int> labels);

}  // namespace hlstm
