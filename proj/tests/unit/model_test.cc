#include <random>

#include <gtest/gtest.h>

#include "hlstm/error.h"
#include "hlstm/grad_check.h"
#include "hlstm/model.h"
#include "synthetic.h"

namespace hlstm {
namespace {

using testing::random_encoding;

ModelConfig toy_config(bool header) {
  ModelConfig config;
  config.vocab_size = 12;
  config.embed_dim = 4;
  config.cell_size = 2;
  config.attention_size = 3;
  config.use_header = header;
  config.init_scale = 0.5;
  return config;
}

LstmWeights lstm_of(const ParamStore& p, const std::string& prefix) {
  return {p.value(prefix + ".input_weights"), p.value(prefix + ".recurrent_weights"),
          p.value(prefix + ".bias")};
}

AttentionWeights attention_of(const ParamStore& p, const std::string& prefix) {
  return {p.value(prefix + ".att.projection"), p.value(prefix + ".att.bias"),
          p.value(prefix + ".att.context")};
}

// Embedding lookup, BiLSTM and attention composed by hand from the layer ops.
Vec flat_sequence(const ParamStore& p, const std::string& prefix, std::span<const TokenId> ids,
                  std::span<const std::uint8_t> mask) {
  std::vector<Vec> inputs(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto row = p.value(prefix + ".embedding").row(static_cast<std::size_t>(ids[j]));
    if (mask[j]) inputs[j].assign(row.begin(), row.end());
  }
  const auto h = bilstm(inputs, mask, lstm_of(p, prefix + ".fwd"), lstm_of(p, prefix + ".bwd"));
  return attention_pool(h.outputs, mask, attention_of(p, prefix)).pooled;
}

Vec flat_body(const ParamStore& p, const EncodedEmail& e) {
  std::vector<Vec> u(e.max_sentences);
  for (std::size_t i = 0; i < e.max_sentences; ++i) {
    if (e.sentence_mask[i]) u[i] = flat_sequence(p, "word", e.sentence_ids(i), e.sentence_tokens_mask(i));
  }
  const auto h = bilstm(u, e.sentence_mask, lstm_of(p, "sentence.fwd"), lstm_of(p, "sentence.bwd"));
  return attention_pool(h.outputs, e.sentence_mask, attention_of(p, "sentence")).pooled;
}

TEST(Model, CompositionalOracleForBodyHeaderAndProbability) {
  std::mt19937_64 rng(17);
  for (const bool header : {false, true}) {
    const HierarchicalModel model(toy_config(header), 5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto e = random_encoding(rng, 2, 3, 5, 12, header, 1);
      const auto trace = model.forward(e);
      const Vec rb = flat_body(model.params(), e);
      EXPECT_EQ(trace.body_representation(), rb);
      Vec r = rb;
      std::string out = "output";
      if (header) {
        const Vec rs = flat_sequence(model.params(), "header", e.header_ids, e.header_mask);
        EXPECT_EQ(trace.header->attention.pooled, rs);
        r.insert(r.end(), rs.begin(), rs.end());
        out = "output_sub";
      }
      double logit = model.params().value(out + ".bias")[0];
      for (std::size_t k = 0; k < r.size(); ++k) logit += model.params().value(out + ".weights")[k] * r[k];
      EXPECT_NEAR(trace.probability, 1.0 / (1.0 + std::exp(-logit)), 1e-15);
      EXPECT_GT(trace.probability, 0.0);
      EXPECT_LT(trace.probability, 1.0);
    }
  }
}

TEST(Model, OutputLayerClosedForms) {
  HierarchicalModel model(toy_config(false), 1);
  std::mt19937_64 rng(1);
  const auto e = random_encoding(rng, 2, 3, 2, 12, false, 0);
  model.params().value("output.weights").fill(0.0);
  EXPECT_EQ(model.predict_proba(e), 0.5);
  model.params().value("output.bias")[0] = 10.0;
  EXPECT_NEAR(model.predict_proba(e), 0.9999546021312976, 1e-15);
}

TEST(Model, IdenticalSentencesShareSentenceVector) {
  const HierarchicalModel model(toy_config(false), 2);
  std::mt19937_64 rng(4);
  auto e = random_encoding(rng, 3, 3, 2, 12, false, 0);
  for (std::size_t i = 0; i < 3; ++i) {
    e.sentence_mask[i] = 1;
    for (std::size_t j = 0; j < 3; ++j) {
      e.body_ids[i * 3 + j] = static_cast<TokenId>(2 + j);
      e.body_mask[i * 3 + j] = 1;
    }
  }
  const auto trace = model.forward(e);
  // The sentence BiLSTM is position-aware, so only the u_i must coincide.
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_EQ(trace.body.sentences[i].attention.pooled, trace.body.sentences[0].attention.pooled);
  }
  double sum = 0.0;
  for (double b : trace.sentence_attention()) sum += b;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Model, SingleSentenceBodyIsItsHidden) {
  const HierarchicalModel model(toy_config(false), 3);
  std::mt19937_64 rng(9);
  auto e = random_encoding(rng, 3, 3, 2, 12, false, 0);
  std::fill(e.sentence_mask.begin() + 1, e.sentence_mask.end(), 0);
  std::fill(e.body_mask.begin() + 3, e.body_mask.end(), 0);
  std::fill(e.body_ids.begin() + 3, e.body_ids.end(), Vocabulary::kPad);
  const auto trace = model.forward(e);
  EXPECT_EQ(trace.sentence_attention(), (Vec{1.0, 0.0, 0.0}));
  EXPECT_EQ(trace.body_representation(), trace.body.lstm.outputs[0]);
}

TEST(Model, HeaderEdgeCases) {
  const HierarchicalModel model(toy_config(true), 4);
  std::mt19937_64 rng(2);
  auto e = random_encoding(rng, 2, 3, 4, 12, true, 1);
  std::fill(e.header_mask.begin(), e.header_mask.end(), 0);
  std::fill(e.header_ids.begin(), e.header_ids.end(), Vocabulary::kPad);
  EXPECT_EQ(model.header_forward(e).attention.pooled, Vec(4, 0.0));

  e.header_ids[0] = 7;
  e.header_mask[0] = 1;
  const auto single = model.header_forward(e);
  EXPECT_EQ(single.attention.pooled, single.lstm.outputs[0]);

  auto no_header = e;
  no_header.has_header = false;
  EXPECT_THROW(model.forward(no_header), ConfigError);
}

TEST(Model, DefaultDimensionsHaveExpectedShapes) {
  ModelConfig config;
  config.vocab_size = 30;
  const HierarchicalModel model(config, 1);
  EXPECT_EQ(model.params().value("word.embedding").cols(), 300u);
  EXPECT_EQ(model.params().value("word.fwd.input_weights").rows(), 240u);
  EXPECT_EQ(model.params().value("sentence.fwd.input_weights").cols(), 120u);
  EXPECT_EQ(model.params().value("output.weights").cols(), 120u);
  std::mt19937_64 rng(3);
  const auto trace = model.forward(random_encoding(rng, 3, 4, 2, 30, false, 0));
  EXPECT_EQ(trace.body.sentences[0].lstm.outputs[0].size(), 120u);
  EXPECT_EQ(trace.body.sentences[0].attention.pooled.size(), 120u);

  config.use_header = true;
  const HierarchicalModel with_header(config, 1);
  EXPECT_EQ(with_header.params().value("output_sub.weights").cols(), 240u);
  EXPECT_EQ(with_header.forward(random_encoding(rng, 3, 4, 2, 30, true, 0)).features.size(), 240u);
}

TEST(Model, InitializationConventions) {
  const HierarchicalModel model(toy_config(true), 6);
  for (const auto& [name, p] : model.params()) {
    EXPECT_TRUE(p.value.all_finite()) << name;
    EXPECT_EQ(p.is_embedding, name.ends_with(".embedding")) << name;
  }
  EXPECT_EQ(model.params().value("word.embedding").row(0)[0], 0.0);
  EXPECT_EQ(model.params().value("word.fwd.bias")[2], 1.0);
  EXPECT_EQ(model.params().value("word.fwd.bias")[0], 0.0);
  EXPECT_TRUE(HierarchicalModel(toy_config(true), 6).params().same_values(model.params()));
}

TEST(Model, SetParamsValidatesLayout) {
  HierarchicalModel model(toy_config(false), 1);
  const HierarchicalModel other(toy_config(true), 1);
  EXPECT_THROW(model.set_params(other.params()), FormatError);
  ParamStore copy = HierarchicalModel(toy_config(false), 9).params();
  model.set_params(copy);
  EXPECT_TRUE(model.params().same_values(copy));
}

TEST(Model, LoadPretrainedCopiesKnownTokens) {
  ModelConfig config = toy_config(true);
  config.vocab_size = 4;
  HierarchicalModel model(config, 1);
  const Vocabulary vocab(std::vector<std::string>{"click", "here"});
  Embeddings emb;
  emb.dim = 4;
  emb.vectors["here"] = Vec{1, 2, 3, 4};
  EXPECT_EQ(model.load_pretrained(vocab, emb), 1u);
  const auto row = model.params().value("header.embedding").row(3);
  EXPECT_EQ(Vec(row.begin(), row.end()), (Vec{1, 2, 3, 4}));
  emb.dim = 5;
  EXPECT_THROW(model.load_pretrained(vocab, emb), ConfigError);
}

double logit_loss(const HierarchicalModel& model, const std::vector<EncodedEmail>& batch,
                  const std::vector<Matrix>& d_alpha) {
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto trace = model.forward(batch[b]);
    total += 0.7 * trace.logit;
    const Matrix alpha = trace.word_attention();
    for (std::size_t i = 0; i < alpha.size(); ++i) total += d_alpha[b][i] * alpha[i];
  }
  return total;
}

TEST(Model, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (const bool header : {false, true}) {
    HierarchicalModel model(toy_config(header), 8);
    std::vector<EncodedEmail> batch;
    std::vector<Matrix> d_alpha;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int b = 0; b < 3; ++b) {
      batch.push_back(random_encoding(rng, 2, 3, 3, 12, header, b % 2));
      Matrix d(2, 3);
      for (double& v : d.values()) v = u(rng);
      d_alpha.push_back(d);
    }
    model.params().zero_grads();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      model.backward(model.forward(batch[b]), Upstream{0.7, d_alpha[b]});
    }
    const auto result = finite_diff_check(
        model.params(), [&](const ParamStore&) { return logit_loss(model, batch, d_alpha); }, 1e-3);
    EXPECT_LT(result.max_relative_error, 1e-5)
        << result.worst_parameter << "[" << result.worst_index << "] " << result.analytic << " vs "
        << result.numeric;
  }
}

TEST(Model, ZeroUpstreamGivesZeroGradients) {
  HierarchicalModel model(toy_config(true), 3);
  std::mt19937_64 rng(5);
  model.backward(model.forward(random_encoding(rng, 2, 3, 3, 12, true, 1)), Upstream{});
  for (const auto& [name, p] : model.params()) {
    for (double g : p.grad.values()) EXPECT_EQ(g, 0.0) << name;
  }
}

TEST(Model, BatchGradientIsAdditiveAndPadRowStaysZero) {
  std::mt19937_64 rng(6);
  const auto e = random_encoding(rng, 2, 3, 3, 12, true, 1);
  HierarchicalModel once(toy_config(true), 3);
  once.backward(once.forward(e), Upstream{0.3, {}});
  HierarchicalModel twice(toy_config(true), 3);
  twice.backward(twice.forward(e), Upstream{0.3, {}});
  twice.backward(twice.forward(e), Upstream{0.3, {}});
  for (const auto& [name, p] : once.params()) {
    const auto& a = p.grad.values();
    const auto& b = twice.params().at(name).grad.values();
    // Summation order differs between one and two accumulated passes.
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(b[i], 2.0 * a[i], 1e-14 * std::max(1.0, std::abs(a[i]))) << name;
    }
  }
  for (const char* table : {"word.embedding", "header.embedding"}) {
    for (double g : twice.params().at(table).grad.row(Vocabulary::kPad)) EXPECT_EQ(g, 0.0);
  }
}

TEST(Model, DropoutIsRecordedAndDeterministic) {
  const HierarchicalModel model(toy_config(false), 3);
  std::mt19937_64 data(7);
  const auto e = random_encoding(data, 2, 3, 3, 12, false, 1);
  Rng a(11), b(11);
  const auto ta = model.forward(e, {.dropout = 0.5, .rng = &a});
  const auto tb = model.forward(e, {.dropout = 0.5, .rng = &b});
  EXPECT_EQ(ta.probability, tb.probability);
  EXPECT_EQ(ta.feature_dropout.size(), 4u);
  EXPECT_EQ(model.predict_proba(e), model.forward(e).probability);
  EXPECT_TRUE(model.forward(e).feature_dropout.empty());
}

}  // namespace
}  // namespace hlstm
