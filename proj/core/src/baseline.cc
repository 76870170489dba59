#include "hlstm/baseline.h"

#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "hlstm/error.h"

namespace hlstm {

TfidfVectorizer TfidfVectorizer::fit(const Dataset& train, const Vocabulary& vocab) {
  TfidfVectorizer v;
  v.vocab_ = vocab;
  const std::size_t n_features = vocab.size() - 2;
  std::vector<std::size_t> df(n_features, 0);
  for (const auto& email : train.emails) {
    std::set<TokenId> present;
    for (const auto& t : email_tokens(email)) {
      const TokenId id = vocab.id(t);
      if (id >= 2) present.insert(id);
    }
    for (TokenId id : present) ++df[static_cast<std::size_t>(id) - 2];
  }
  const double n = static_cast<double>(train.size());
  v.idf_.resize(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    v.idf_[f] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[f]))) + 1.0;
  }
  return v;
}

FeatureMatrix TfidfVectorizer::transform(const Dataset& dataset) const {
  FeatureMatrix out{FeatureKind::kTfidf, Matrix(dataset.size(), idf_.size())};
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    auto row = out.values.row(r);
    for (const auto& t : email_tokens(dataset.emails[r])) {
      const TokenId id = vocab_.id(t);
      if (id >= 2) row[static_cast<std::size_t>(id) - 2] += 1.0;
    }
    double norm = 0.0;
    for (std::size_t f = 0; f < row.size(); ++f) {
      row[f] *= idf_[f];
      norm += row[f] * row[f];
    }
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& x : row) x /= norm;
    }
  }
  return out;
}

FeatureMatrix tfidf_features(const Dataset& dataset, const Vocabulary& vocab) {
  return TfidfVectorizer::fit(dataset, vocab).transform(dataset);
}

FeatureMatrix embed_mean_features(const Dataset& dataset, const Embeddings& embeddings) {
  FeatureMatrix out{FeatureKind::kEmbedMean, Matrix(dataset.size(), embeddings.dim)};
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    auto row = out.values.row(r);
    std::size_t found = 0;
    for (const auto& t : email_tokens(dataset.emails[r])) {
      if (const Vec* v = embeddings.find(t)) {
        axpy(1.0, *v, row);
        ++found;
      }
    }
    if (found) {
      for (double& x : row) x /= static_cast<double>(found);
    }
  }
  return out;
}

FeatureMatrix concat_features(const FeatureMatrix& left, const FeatureMatrix& right) {
  if (left.rows() != right.rows()) throw ConfigError("concat_features: row counts differ");
  FeatureMatrix out{FeatureKind::kConcat, Matrix(left.rows(), left.cols() + right.cols())};
  for (std::size_t r = 0; r < left.rows(); ++r) {
    auto row = out.values.row(r);
    const auto a = left.values.row(r);
    const auto b = right.values.row(r);
    std::copy(a.begin(), a.end(), row.begin());
    std::copy(b.begin(), b.end(), row.begin() + static_cast<std::ptrdiff_t>(a.size()));
  }
  return out;
}

void write_features_csv(const FeatureMatrix& features, std::ostream& out) {
  for (std::size_t c = 0; c < features.cols(); ++c) out << (c ? ",f" : "f") << c;
  out << '\n';
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto row = features.values.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << fmt::format("{}", row[c]);
    out << '\n';
  }
}

double svm_decision(const LinearSvmModel& model, std::span<const double> x) {
  return dot(model.weights, x) + model.bias;
}

std::vector<int> svm_predict(const LinearSvmModel& model, const FeatureMatrix& features) {
  std::vector<int> out(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    out[r] = svm_decision(model, features.values.row(r)) > 0.0 ? 1 : 0;
  }
  return out;
}

double svm_objective(const LinearSvmModel& model, const FeatureMatrix& features,
                     std::span<const int> labels) {
  double objective = 0.5 * (dot(model.weights, model.weights) + model.bias * model.bias);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const double y = labels[r] == 1 ? 1.0 : -1.0;
    objective += model.C * std::max(0.0, 1.0 - y * svm_decision(model, features.values.row(r)));
  }
  return objective;
}

SvmTrainResult svm_train(const FeatureMatrix& features, std::span<const int> labels,
                         const SvmOptions& options) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (labels.size() != n) throw ConfigError("svm_train: label count does not match features");
  std::size_t positives = 0;
  for (int y : labels) positives += y == 1 ? 1 : 0;
  if (positives == 0 || positives == n) throw ConfigError("svm_train: need examples of both classes");
  if (!(options.C > 0.0) || options.iterations == 0) {
    throw ConfigError("svm_train: C and iterations must be positive");
  }

  const double lambda = 1.0 / (options.C * static_cast<double>(n));
  // Weight vector with the bias as a trailing coordinate on a constant feature.
  Vec w(d + 1, 0.0);
  Vec avg(d + 1, 0.0);
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  SvmTrainResult result;
  result.model.C = options.C;
  auto snapshot = [&](LinearSvmModel& m) {
    m.weights.assign(avg.begin(), avg.end() - 1);
    m.bias = avg.back();
  };

  for (std::size_t t = 1; t <= options.iterations; ++t) {
    const std::size_t i = pick(rng);
    const auto x = features.values.row(i);
    const double y = labels[i] == 1 ? 1.0 : -1.0;
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    double margin = w[d];
    for (std::size_t f = 0; f < d; ++f) margin += w[f] * x[f];
    margin *= y;

    const double shrink = 1.0 - 1.0 / static_cast<double>(t);
    for (double& v : w) v *= shrink;
    if (margin < 1.0) {
      for (std::size_t f = 0; f < d; ++f) w[f] += eta * y * x[f];
      w[d] += eta * y;
    }
    const double inv_t = 1.0 / static_cast<double>(t);
    for (std::size_t f = 0; f <= d; ++f) avg[f] += (w[f] - avg[f]) * inv_t;

    if (options.trace_every && t % options.trace_every == 0) {
      LinearSvmModel m;
      m.C = options.C;
      snapshot(m);
      result.objective_trace.push_back(svm_objective(m, features, labels));
    }
  }
  snapshot(result.model);
  return result;
}

}  // namespace hlstm
