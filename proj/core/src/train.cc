#include "hlstm/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hlstm/error.h"

namespace hlstm {

NLOHMANN_JSON_SERIALIZE_ENUM(ClipMode, {{ClipMode::kGradient, "gradient"},
                                        {ClipMode::kWeight, "weight"}})

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"validation_fraction", c.validation_fraction},
                     {"lambda", c.lambda},
                     {"use_supervision", c.use_supervision},
                     {"dropout", c.dropout},
                     {"clip_threshold", c.clip_threshold},
                     {"clip_mode", c.clip_mode},
                     {"seed", c.seed},
                     {"max_sentences", c.max_sentences},
                     {"max_words", c.max_words},
                     {"max_header", c.max_header},
                     {"embed_dim", c.embed_dim},
                     {"cell_size", c.cell_size},
                     {"attention_size", c.attention_size},
                     {"use_header", c.use_header},
                     {"min_count", c.min_count},
                     {"init_scale", c.init_scale}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.patience = j.value("patience", d.patience);
  c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
  c.lambda = j.value("lambda", d.lambda);
  c.use_supervision = j.value("use_supervision", d.use_supervision);
  c.dropout = j.value("dropout", d.dropout);
  c.clip_threshold = j.value("clip_threshold", d.clip_threshold);
  c.clip_mode = j.value("clip_mode", d.clip_mode);
  c.seed = j.value("seed", d.seed);
  c.max_sentences = j.value("max_sentences", d.max_sentences);
  c.max_words = j.value("max_words", d.max_words);
  c.max_header = j.value("max_header", d.max_header);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.cell_size = j.value("cell_size", d.cell_size);
  c.attention_size = j.value("attention_size", d.attention_size);
  c.use_header = j.value("use_header", d.use_header);
  c.min_count = j.value("min_count", d.min_count);
  c.init_scale = j.value("init_scale", d.init_scale);
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid training config: ") + what);
  };
  require(learning_rate > 0.0, "learning rate must be positive");
  require(batch_size > 0, "batch size must be positive");
  require(max_epochs > 0, "epochs must be positive");
  require(validation_fraction > 0.0 && validation_fraction < 1.0,
          "validation fraction must lie in (0, 1)");
  require(lambda >= 0.0, "lambda must be non-negative");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(clip_threshold > 0.0, "clip threshold must be positive");
  require(max_sentences > 0 && max_words > 0 && max_header > 0, "L, K and H must be positive");
  require(embed_dim > 0 && cell_size > 0 && attention_size > 0, "dimensions must be positive");
  require(min_count > 0, "min count must be positive");
  require(init_scale > 0.0, "init scale must be positive");
}

BceLoss bce_loss(double probability, int label) {
  constexpr double kEps = 1e-12;
  const double p = std::clamp(probability, kEps, 1.0 - kEps);
  const double y = label == 1 ? 1.0 : 0.0;
  return {-(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)), (p - y) / (p * (1.0 - p))};
}

LossBreakdown batch_objective(HierarchicalModel& model, std::span<const Example> batch,
                              double lambda, const ForwardOptions& options, bool backprop) {
  LossBreakdown loss;
  loss.lambda = lambda;
  if (batch.empty()) return loss;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Example& ex : batch) {
    if (!ex.email.label) throw ConfigError("training example without a label");
    const ForwardTrace trace = model.forward(ex.email, options);
    const BceLoss bce = bce_loss(trace.probability, *ex.email.label);
    loss.classification += bce.loss * inv_n;

    const bool supervised = lambda > 0.0 && !ex.scores.empty();
    Matrix alpha;
    if (supervised) {
      alpha = trace.word_attention();
      loss.penalty += attention_penalty(alpha, ex.scores, ex.email) * inv_n;
    }
    if (backprop) {
      Upstream up;
      // dL/dlogit = dL/dp * p (1 - p); equals p - y away from the clamp.
      const double p = trace.probability;
      up.d_logit = bce.d_probability * p * (1.0 - p) * inv_n;
      if (supervised) {
        up.d_word_attention = attention_penalty_grad(alpha, ex.scores, ex.email);
        up.d_word_attention.scale(lambda * inv_n);
      }
      model.backward(trace, up);
    }
  }
  loss.total = loss.classification + lambda * loss.penalty;
  return loss;
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,loss,penalty,val_precision,val_recall,val_f1\n";
  for (const auto& e : epochs) {
    out << fmt::format("{},{:.10g},{:.10g}", e.epoch, e.loss.total, e.loss.lambda * e.loss.penalty);
    if (e.validation) {
      out << fmt::format(",{:.6f},{:.6f},{:.6f}\n", e.validation->precision, e.validation->recall,
                         e.validation->f1);
    } else {
      out << ",,,\n";
    }
  }
}

ModelConfig model_config(const TrainConfig& config, std::size_t vocab_size) {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.embed_dim = config.embed_dim;
  m.cell_size = config.cell_size;
  m.attention_size = config.attention_size;
  m.use_header = config.use_header;
  m.init_scale = config.init_scale;
  return m;
}

std::vector<Example> make_examples(const Dataset& dataset, const TrainConfig& config,
                                   const Vocabulary& vocab, const ImportanceTable* importance) {
  std::vector<Example> out;
  out.reserve(dataset.size());
  for (const auto& email : dataset.emails) {
    Example ex;
    ex.email = encode_email(email, vocab, config.max_sentences, config.max_words, config.max_header);
    if (importance) ex.scores = email_scores(ex.email, *importance);
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

Metrics evaluate_examples(const HierarchicalModel& model, const std::vector<Example>& examples) {
  std::vector<int> predictions;
  std::vector<int> labels;
  for (const auto& ex : examples) {
    predictions.push_back(label_at(model.predict_proba(ex.email)));
    labels.push_back(*ex.email.label);
  }
  return score(predictions, labels);
}

// Independent streams derived from the user seed.
constexpr std::uint64_t kInitStream = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kShuffleStream = 0xC2B2AE3D27D4EB4Full;

}  // namespace

TrainResult train(const Dataset& dataset, const TrainConfig& config_in,
                  const Embeddings* embeddings, const EpochObserver& observer) {
  TrainConfig config = config_in;
  if (embeddings) config.embed_dim = embeddings->dim;
  config.validate();
  if (dataset.empty()) throw Error("cannot train on an empty dataset");
  if (!dataset.fully_labeled()) throw ConfigError("training needs a labeled corpus");
  if (config.use_header && !dataset.has_headers) {
    throw ConfigError("use_header is set but the corpus has no headers");
  }

  // Validation split for early stopping.
  std::vector<std::size_t> train_idx(dataset.size());
  std::iota(train_idx.begin(), train_idx.end(), 0);
  std::vector<std::size_t> val_idx;
  if (config.patience > 0) {
    auto [tr, va] = stratified_holdout(dataset, config.validation_fraction, config.seed);
    if (!va.empty() && !tr.empty()) {
      train_idx = std::move(tr);
      val_idx = std::move(va);
    } else {
      spdlog::warn("dataset too small for a validation split; early stopping disabled");
    }
  }
  const Dataset train_set = dataset.subset(train_idx);
  const Dataset val_set = dataset.subset(val_idx);

  Vocabulary vocab = build_vocab(train_set, config.min_count);
  ImportanceTable importance;
  const bool supervised = config.supervision_active();
  if (supervised) importance = compute_ranks(train_set, vocab);

  HierarchicalModel model(model_config(config, vocab.size()), config.seed ^ kInitStream);
  if (embeddings) {
    const std::size_t hits = model.load_pretrained(vocab, *embeddings);
    spdlog::info("pretrained vectors for {} of {} vocabulary tokens", hits, vocab.size() - 2);
  }

  const auto examples = make_examples(train_set, config, vocab, supervised ? &importance : nullptr);
  const auto val_examples = make_examples(val_set, config, vocab, nullptr);

  AdamState adam;
  adam.learning_rate = config.learning_rate;
  Rng rng(config.seed ^ kShuffleStream);
  const ForwardOptions options{config.dropout, &rng};
  const double lambda = supervised ? config.lambda : 0.0;

  TrainHistory history;
  ParamStore best_params = model.params();
  AdamState best_adam = adam;
  double best_f1 = -1.0;
  std::size_t stale = 0;

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord record;
    record.epoch = epoch;
    record.loss.lambda = lambda;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t b = start; b < end; ++b) batch.push_back(examples[order[b]]);

      model.params().zero_grads();
      const LossBreakdown loss = batch_objective(model, batch, lambda, options, true);
      if (!std::isfinite(loss.total)) {
        throw Error(fmt::format("non-finite loss in epoch {} batch {}", epoch, batches + 1));
      }
      clip_frobenius(model.params(), config.clip_threshold, config.clip_mode);
      adam_step(model.params(), adam);

      record.loss.classification += loss.classification;
      record.loss.penalty += loss.penalty;
      ++batches;
    }
    if (batches) {
      record.loss.classification /= static_cast<double>(batches);
      record.loss.penalty /= static_cast<double>(batches);
    }
    record.loss.total = record.loss.classification + lambda * record.loss.penalty;

    bool stop = false;
    if (!val_examples.empty()) {
      record.validation = evaluate_examples(model, val_examples);
      if (record.validation->f1 > best_f1) {
        best_f1 = record.validation->f1;
        best_params = model.params();
        best_adam = adam;
        history.best_epoch = epoch;
        stale = 0;
      } else if (++stale >= config.patience) {
        stop = true;
      }
    } else {
      history.best_epoch = epoch;
    }
    spdlog::debug("epoch {} loss {:.6f}", epoch, record.loss.total);
    history.epochs.push_back(record);
    if (observer && observer(record, model)) break;
    if (stop) break;
  }

  if (!val_examples.empty()) {
    model.set_params(std::move(best_params));
    adam = std::move(best_adam);
  }
  model.params().zero_grads();
  return {TrainedModel{config, std::move(vocab), std::move(importance), std::move(model),
                       std::move(adam)},
          std::move(history)};
}

std::vector<double> predict(const TrainedModel& trained, const Dataset& dataset) {
  if (trained.config.use_header && !dataset.empty() && !dataset.has_headers) {
    throw ConfigError("checkpoint was trained with headers but the corpus has none");
  }
  std::vector<double> out;
  out.reserve(dataset.size());
  for (const auto& email : dataset.emails) {
    const auto enc = encode_email(email, trained.vocab, trained.config.max_sentences,
                                  trained.config.max_words, trained.config.max_header);
    out.push_back(trained.model.predict_proba(enc));
  }
  return out;
}

}  // namespace hlstm
