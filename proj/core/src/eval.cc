#include "hlstm/eval.h"

#include <fmt/format.h>

#include "hlstm/error.h"

namespace hlstm {

double Metrics::accuracy() const {
  const std::size_t n = total();
  return n ? static_cast<double>(true_positives + true_negatives) / static_cast<double>(n) : 0.0;
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m{tp, fp, tn, fn};
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  // Harmonic mean in count form, 2TP / (2TP + FP + FN).
  m.f1 = m.precision + m.recall > 0.0 ? ratio(2 * tp, 2 * tp + fp + fn) : 0.0;
  return m;
}

Metrics score(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ConfigError("score: " + std::to_string(predictions.size()) + " predictions for " +
                      std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ConfigError("score: no predictions to score");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = predictions[i] == 1;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

CrossValidationReport cross_validate(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                                     const Learner& learner) {
  if (!dataset.fully_labeled()) throw ConfigError("cross-validation needs a labeled corpus");
  const FoldAssignment folds = stratified_kfold(dataset, k, seed);

  CrossValidationReport report;
  std::vector<int> all_predictions;
  std::vector<int> all_labels;
  for (std::size_t f = 0; f < k; ++f) {
    const Dataset train = dataset.subset(folds.train_indices(dataset, f));
    const Dataset test = dataset.subset(folds.test_indices(dataset, f));
    std::vector<int> predictions;
    try {
      predictions = learner(train, test, f);
    } catch (const Error& e) {
      throw Error(fmt::format("fold {}: {}", f, e.what()));
    }
    std::vector<int> labels;
    labels.reserve(test.size());
    for (const auto& e : test.emails) labels.push_back(*e.label);
    report.folds.push_back(score(predictions, labels));
    report.fold_sizes.push_back(test.size());
    all_predictions.insert(all_predictions.end(), predictions.begin(), predictions.end());
    all_labels.insert(all_labels.end(), labels.begin(), labels.end());
  }

  Metrics& mean = report.mean;
  for (const auto& m : report.folds) {
    mean.true_positives += m.true_positives;
    mean.false_positives += m.false_positives;
    mean.true_negatives += m.true_negatives;
    mean.false_negatives += m.false_negatives;
    mean.precision += m.precision / static_cast<double>(k);
    mean.recall += m.recall / static_cast<double>(k);
    mean.f1 += m.f1 / static_cast<double>(k);
  }
  report.pooled = score(all_predictions, all_labels);
  return report;
}

void write_metrics_header(std::ostream& out) { out << "model,fold,precision,recall,f1\n"; }

void write_metrics_row(std::ostream& out, const std::string& model, const std::string& fold,
                       const Metrics& m) {
  out << fmt::format("{},{},{:.4f},{:.4f},{:.4f}\n", model, fold, m.precision, m.recall, m.f1);
}

}  // namespace hlstm
