#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hlstm/corpus.h"
#include "hlstm/embeddings.h"
#include "hlstm/eval.h"
#include "hlstm/model.h"
#include "hlstm/optimizer.h"
#include "hlstm/supervision.h"
#include "hlstm/textprep.h"

namespace hlstm {

struct TrainConfig {
  double learning_rate = 0.0025;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  // Epochs without validation-F1 improvement before stopping; 0 trains for
  // max_epochs on all data with no validation split.
  std::size_t patience = 10;
  double validation_fraction = 0.1;
  double lambda = 0.1;
  bool use_supervision = true;
  double dropout = 0.5;
  double clip_threshold = 0.3;
  ClipMode clip_mode = ClipMode::kGradient;
  std::uint64_t seed = 1;
  std::size_t max_sentences = 30;  // L
  std::size_t max_words = 50;      // K
  std::size_t max_header = 30;     // H
  std::size_t embed_dim = 300;
  std::size_t cell_size = 60;
  std::size_t attention_size = 60;
  bool use_header = false;
  std::size_t min_count = 2;
  double init_scale = 0.08;

  // Supervision contributes only when enabled with a positive lambda.
  bool supervision_active() const { return use_supervision && lambda > 0.0; }
  // Throws ConfigError on out-of-range values.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct LossBreakdown {
  double classification = 0.0;
  double penalty = 0.0;  // unweighted sum of squared attention errors
  double lambda = 0.0;
  double total = 0.0;    // classification + lambda * penalty

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct BceLoss {
  double loss = 0.0;
  double d_probability = 0.0;
};

// Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
BceLoss bce_loss(double probability, int label);

// Training example: encoding plus normalized importance grid (empty when
// supervision is off).
struct Example {
  EncodedEmail email;
  Matrix scores;
};

// Mean loss over `batch`; when `backprop` is set, accumulates the gradient
// of that mean into model.params(). Dropout follows `options`.
LossBreakdown batch_objective(HierarchicalModel& model, std::span<const Example> batch,
                              double lambda, const ForwardOptions& options, bool backprop);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;     // mean over training batches
  std::optional<Metrics> validation;

  friend bool operator==(const EpochRecord& a, const EpochRecord& b) {
    return a.epoch == b.epoch && a.loss == b.loss &&
           a.validation.has_value() == b.validation.has_value() &&
           (!a.validation || (a.validation->precision == b.validation->precision &&
                              a.validation->recall == b.validation->recall &&
                              a.validation->f1 == b.validation->f1));
  }
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;

  // CSV: epoch,loss,penalty,val_precision,val_recall,val_f1. `penalty` is
  // the weighted term lambda * penalty; validation cells are empty when no
  // validation split was used.
  void write_csv(std::ostream& out) const;
  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

// Everything needed to predict: resolved config, vocabulary, importance
// table, parameters and optimizer state.
struct TrainedModel {
  TrainConfig config;
  Vocabulary vocab;
  ImportanceTable importance;
  HierarchicalModel model;
  AdamState adam;
};

struct TrainResult {
  TrainedModel trained;
  TrainHistory history;
};

// Called after every epoch with the current model; return true to stop.
using EpochObserver = std::function<bool(const EpochRecord&, const HierarchicalModel&)>;

ModelConfig model_config(const TrainConfig& config, std::size_t vocab_size);

// Trains with seeded shuffled mini-batches, dropout, clipping and Adam;
// keeps the parameters of the best validation epoch when early stopping is
// on. `embeddings`, when given, fixes embed_dim and seeds both tables.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const Embeddings* embeddings = nullptr, const EpochObserver& observer = {});

std::vector<Example> make_examples(const Dataset& dataset, const TrainConfig& config,
                                   const Vocabulary& vocab, const ImportanceTable* importance);

// Phishing probabilities for every email, in order. Throws ConfigError when
// the model uses headers and the dataset has none.
std::vector<double> predict(const TrainedModel& trained, const Dataset& dataset);

inline int label_at(double probability, double threshold = 0.5) {
  return probability >= threshold ? 1 : 0;
}

}  // namespace hlstm
