#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hlstm/error.h"
#include "hlstm/grad_check.h"
#include "hlstm/train.h"
#include "synthetic.h"

namespace hlstm {
namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.embed_dim = 6;
  c.cell_size = 4;
  c.attention_size = 4;
  c.max_sentences = 4;
  c.max_words = 10;
  c.max_header = 5;
  c.batch_size = 8;
  c.max_epochs = 3;
  c.patience = 0;
  c.min_count = 1;
  return c;
}

TEST(BceLoss, ClosedForms) {
  EXPECT_NEAR(bce_loss(0.5, 1).loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(0.5, 0).loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(0.9, 1).loss, 0.10536051565782628, 1e-15);
  EXPECT_NEAR(bce_loss(0.9, 1).d_probability, -1.0 / 0.9, 1e-12);
  EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1).loss));
  EXPECT_TRUE(std::isfinite(bce_loss(1.0, 0).loss));
}

std::vector<Example> toy_examples(const TrainConfig& config, const Dataset& ds, Vocabulary& vocab,
                                  ImportanceTable& table) {
  vocab = build_vocab(ds, 1);
  table = compute_ranks(ds, vocab);
  return make_examples(ds, config, vocab, &table);
}

TEST(BatchObjective, LambdaZeroIsClassificationOnly) {
  const TrainConfig config = small_config();
  const Dataset ds = testing::separable_corpus({.emails = 10, .seed = 3});
  Vocabulary vocab;
  ImportanceTable table;
  const auto examples = toy_examples(config, ds, vocab, table);
  HierarchicalModel model(model_config(config, vocab.size()), 1);
  const auto loss = batch_objective(model, examples, 0.0, {}, false);
  EXPECT_EQ(loss.total, loss.classification);
  EXPECT_EQ(loss.penalty, 0.0);
  const auto supervised = batch_objective(model, examples, 0.1, {}, false);
  EXPECT_GT(supervised.penalty, 0.0);
  EXPECT_EQ(supervised.total, supervised.classification + 0.1 * supervised.penalty);
}

TEST(BatchObjective, GradientOfMeanLossWithPenalty) {
  TrainConfig config = small_config();
  config.max_sentences = 2;
  config.max_words = 4;
  config.use_header = true;
  config.init_scale = 0.4;
  const Dataset ds = testing::separable_corpus({.emails = 5, .phishing_fraction = 0.4, .seed = 9, .headers = true});
  Vocabulary vocab;
  ImportanceTable table;
  const auto examples = toy_examples(config, ds, vocab, table);
  HierarchicalModel model(model_config(config, vocab.size()), 2);
  model.params().zero_grads();
  batch_objective(model, examples, 0.5, {}, true);
  const auto result = finite_diff_check(
      model.params(),
      [&](const ParamStore&) { return batch_objective(model, examples, 0.5, {}, false).total; },
      1e-3);
  EXPECT_LT(result.max_relative_error, 1e-4) << result.worst_parameter << "[" << result.worst_index
                                             << "]";
}

TEST(Train, DeterministicForSeed) {
  const Dataset ds = testing::separable_corpus({.emails = 30, .seed = 4});
  TrainConfig config = small_config();
  config.patience = 2;
  config.validation_fraction = 0.2;
  const auto a = train(ds, config);
  const auto b = train(ds, config);
  EXPECT_EQ(a.history, b.history);
  EXPECT_TRUE(a.trained.model.params().same_values(b.trained.model.params()));
  std::ostringstream ca, cb;
  a.history.write_csv(ca);
  b.history.write_csv(cb);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_TRUE(a.history.epochs.front().validation.has_value());
}

TEST(Train, LambdaZeroHistoryHasZeroPenalty) {
  const Dataset ds = testing::separable_corpus({.emails = 20, .seed = 5});
  TrainConfig config = small_config();
  config.lambda = 0.0;
  const auto result = train(ds, config);
  std::ostringstream csv;
  result.history.write_csv(csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "epoch,loss,penalty,val_precision,val_recall,val_f1");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    ASSERT_GE(cells.size(), 3u);
    EXPECT_EQ(cells[2], "0");
    ++rows;
  }
  EXPECT_EQ(rows, config.max_epochs);
}

TEST(Train, LossDecreasesOnSeparableData) {
  const Dataset ds = testing::separable_corpus({.emails = 40, .seed = 6});
  TrainConfig config = small_config();
  config.max_epochs = 15;
  config.learning_rate = 0.01;
  const auto result = train(ds, config);
  EXPECT_LT(result.history.epochs.back().loss.classification,
            result.history.epochs.front().loss.classification);
}

double mean_gap(const TrainedModel& trained, const std::vector<Example>& examples) {
  double total = 0.0;
  std::size_t cells = 0;
  for (const auto& ex : examples) {
    const Matrix alpha = trained.model.forward(ex.email).word_attention();
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (!ex.email.body_mask[i]) continue;
      total += std::abs(alpha[i] - ex.scores[i]);
      ++cells;
    }
  }
  return total / static_cast<double>(cells);
}

TEST(Train, LargeLambdaPullsAttentionTowardScores) {
  const Dataset ds = testing::separable_corpus({.emails = 40, .seed = 7});
  TrainConfig config = small_config();
  config.max_epochs = 8;
  config.learning_rate = 0.01;
  config.lambda = 0.0;
  const auto plain = train(ds, config);
  config.lambda = 100.0;
  const auto pulled = train(ds, config);

  const Vocabulary vocab = build_vocab(ds, 1);
  const ImportanceTable table = compute_ranks(ds, vocab);
  const auto examples = make_examples(ds, config, vocab, &table);
  EXPECT_LT(mean_gap(pulled.trained, examples), mean_gap(plain.trained, examples));
}

TEST(Train, ObserverCanStopEarly) {
  const Dataset ds = testing::separable_corpus({.emails = 20, .seed = 8});
  TrainConfig config = small_config();
  config.max_epochs = 10;
  const auto result =
      train(ds, config, nullptr, [](const EpochRecord& r, const HierarchicalModel&) { return r.epoch == 2; });
  EXPECT_EQ(result.history.epochs.size(), 2u);
}

TEST(Train, RejectsBadInput) {
  TrainConfig config = small_config();
  EXPECT_THROW(train(Dataset{}, config), Error);
  Dataset unlabeled = testing::separable_corpus({.emails = 10, .seed = 1});
  unlabeled.emails[3].label.reset();
  EXPECT_THROW(train(unlabeled, config), ConfigError);
  config.use_header = true;
  EXPECT_THROW(train(testing::separable_corpus({.emails = 10, .seed = 1}), config), ConfigError);
  config = small_config();
  config.dropout = 1.0;
  EXPECT_THROW(config.validate(), ConfigError);
}

TEST(Train, EmbeddingsFixDimension) {
  const Dataset ds = testing::separable_corpus({.emails = 12, .seed = 2});
  Embeddings emb;
  emb.dim = 3;
  emb.vectors["meeting"] = Vec{0.1, 0.2, 0.3};
  TrainConfig config = small_config();
  config.max_epochs = 1;
  const auto result = train(ds, config, &emb);
  EXPECT_EQ(result.trained.config.embed_dim, 3u);
  EXPECT_EQ(result.trained.model.params().value("word.embedding").cols(), 3u);
}

TEST(Predict, HeaderGuard) {
  const Dataset with_headers = testing::separable_corpus({.emails = 12, .seed = 2, .headers = true});
  TrainConfig config = small_config();
  config.max_epochs = 1;
  config.use_header = true;
  const auto result = train(with_headers, config);
  EXPECT_EQ(predict(result.trained, with_headers).size(), 12u);
  const Dataset bare = testing::separable_corpus({.emails = 12, .seed = 2});
  EXPECT_THROW(predict(result.trained, bare), ConfigError);
  EXPECT_TRUE(predict(result.trained, Dataset{}).empty());
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig c = small_config();
  c.clip_mode = ClipMode::kWeight;
  c.seed = 99;
  const nlohmann::json j = c;
  EXPECT_EQ(j.at("clip_mode"), "weight");
  EXPECT_EQ(j.get<TrainConfig>(), c);
}

TEST(LabelAt, ThresholdIsInclusive) {
  EXPECT_EQ(label_at(0.5), 1);
  EXPECT_EQ(label_at(0.4999), 0);
}

}  // namespace
}  // namespace hlstm
