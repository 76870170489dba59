#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hlstm/corpus.h"

namespace hlstm {

// Binary classification metrics with phishing (label 1) as the positive
// class. Undefined ratios (0/0) are reported as 0.
struct Metrics {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  double accuracy() const;
  std::size_t total() const {
    return true_positives + false_positives + true_negatives + false_negatives;
  }
};

// Derives precision, recall and F1 from counts.
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

Metrics score(std::span<const int> predictions, std::span<const int> labels);

// Trains on `train` and returns one 0/1 prediction per email of `test`.
using Learner =
    std::function<std::vector<int>(const Dataset& train, const Dataset& test, std::size_t fold)>;

struct CrossValidationReport {
  std::vector<Metrics> folds;
  std::vector<std::size_t> fold_sizes;
  // Unweighted mean of the per-fold precision/recall/F1; counts are summed.
  Metrics mean;
  // Metrics over the pooled predictions of every fold.
  Metrics pooled;
};

// Stratified k-fold evaluation: for each fold, trains on the other folds and
// scores the held-out one. Errors from the learner are rethrown with the
// fold index attached.
CrossValidationReport cross_validate(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                                     const Learner& learner);

// CSV with columns model,fold,precision,recall,f1.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const std::string& model, const std::string& fold,
                       const Metrics& m);

}  // namespace hlstm
