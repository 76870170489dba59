#include "hlstm/model.h"

#include <random>

#include "hlstm/error.h"

namespace hlstm {
namespace {

const std::string kWord = "word";
const std::string kSentence = "sentence";
const std::string kHeader = "header";

std::string output_prefix(bool use_header) { return use_header ? "output_sub" : "output"; }

}  // namespace

Matrix ForwardTrace::word_attention() const {
  Matrix grid(max_sentences, max_words);
  for (std::size_t i = 0; i < body.sentences.size(); ++i) {
    if (!body.sentence_mask[i]) continue;
    const Vec& w = body.sentences[i].attention.weights;
    std::copy(w.begin(), w.end(), grid.row(i).begin());
  }
  return grid;
}

HierarchicalModel::HierarchicalModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  if (config.vocab_size < 2 || config.embed_dim == 0 || config.cell_size == 0 ||
      config.attention_size == 0) {
    throw ConfigError("model dimensions must be positive and vocab must hold PAD and UNK");
  }
  init_parameters(seed);
}

void HierarchicalModel::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(-config_.init_scale, config_.init_scale);
  auto random = [&](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = uniform(rng);
    return m;
  };
  const std::size_t c = config_.cell_size;
  const std::size_t a = config_.attention_size;

  auto add_embedding = [&](const std::string& prefix) {
    Matrix table = random(config_.vocab_size, config_.embed_dim);
    for (double& v : table.row(Vocabulary::kPad)) v = 0.0;
    params_.add(prefix + ".embedding", std::move(table), true);
  };
  auto add_lstm = [&](const std::string& prefix, std::size_t input) {
    for (const char* dir : {".fwd", ".bwd"}) {
      params_.add(prefix + dir + ".input_weights", random(4 * c, input));
      params_.add(prefix + dir + ".recurrent_weights", random(4 * c, c));
      Matrix bias(4 * c, 1);
      for (std::size_t k = c; k < 2 * c; ++k) bias[k] = 1.0;  // forget gate
      params_.add(prefix + dir + ".bias", std::move(bias));
    }
  };
  auto add_attention = [&](const std::string& prefix) {
    params_.add(prefix + ".att.projection", random(a, 2 * c));
    params_.add(prefix + ".att.bias", Matrix(a, 1));
    params_.add(prefix + ".att.context", random(a, 1));
  };

  add_embedding(kWord);
  add_lstm(kWord, config_.embed_dim);
  add_attention(kWord);
  add_lstm(kSentence, 2 * c);
  add_attention(kSentence);
  if (config_.use_header) {
    add_embedding(kHeader);
    add_lstm(kHeader, config_.embed_dim);
    add_attention(kHeader);
  }
  const std::string out = output_prefix(config_.use_header);
  params_.add(out + ".weights", random(1, config_.use_header ? 4 * c : 2 * c));
  params_.add(out + ".bias", Matrix(1, 1));
}

void HierarchicalModel::set_params(ParamStore params) {
  for (const auto& [name, p] : params_) {
    if (!params.contains(name) || !params.at(name).value.same_shape(p.value)) {
      throw FormatError("parameter set does not match the model layout at '" + name + "'");
    }
  }
  if (params.size() != params_.size()) {
    throw FormatError("parameter set has entries the model does not use");
  }
  params_ = std::move(params);
}

std::size_t HierarchicalModel::load_pretrained(const Vocabulary& vocab,
                                               const Embeddings& embeddings) {
  if (embeddings.dim != config_.embed_dim) {
    throw ConfigError("embedding dimension " + std::to_string(embeddings.dim) +
                      " does not match the model's " + std::to_string(config_.embed_dim));
  }
  if (vocab.size() != config_.vocab_size) throw ConfigError("vocabulary size mismatch");
  std::size_t hits = 0;
  for (std::size_t id = 2; id < vocab.size(); ++id) {
    const Vec* v = embeddings.find(vocab.token(static_cast<TokenId>(id)));
    if (!v) continue;
    ++hits;
    for (const std::string& prefix : {kWord, kHeader}) {
      if (!params_.contains(prefix + ".embedding")) continue;
      auto row = params_.value(prefix + ".embedding").row(id);
      std::copy(v->begin(), v->end(), row.begin());
    }
  }
  return hits;
}

LstmWeights HierarchicalModel::lstm(const std::string& prefix) const {
  return {params_.value(prefix + ".input_weights"), params_.value(prefix + ".recurrent_weights"),
          params_.value(prefix + ".bias")};
}

LstmGrads HierarchicalModel::lstm_grads(const std::string& prefix) {
  return {params_.grad(prefix + ".input_weights"), params_.grad(prefix + ".recurrent_weights"),
          params_.grad(prefix + ".bias")};
}

AttentionWeights HierarchicalModel::attention(const std::string& prefix) const {
  return {params_.value(prefix + ".att.projection"), params_.value(prefix + ".att.bias"),
          params_.value(prefix + ".att.context")};
}

AttentionGrads HierarchicalModel::attention_grads(const std::string& prefix) {
  return {params_.grad(prefix + ".att.projection"), params_.grad(prefix + ".att.bias"),
          params_.grad(prefix + ".att.context")};
}

SequenceTrace HierarchicalModel::word_pipeline(const std::string& prefix,
                                               std::span<const TokenId> ids,
                                               std::span<const std::uint8_t> mask) const {
  const Matrix& table = params_.value(prefix + ".embedding");
  SequenceTrace trace;
  trace.ids.assign(ids.begin(), ids.end());
  std::vector<Vec> inputs(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (!mask[j]) continue;
    const auto id = static_cast<std::size_t>(ids[j]);
    if (id >= table.rows()) throw InternalError("token id outside the embedding table");
    const auto row = table.row(id);
    inputs[j].assign(row.begin(), row.end());
  }
  trace.lstm = bilstm(std::move(inputs), mask, lstm(prefix + ".fwd"), lstm(prefix + ".bwd"));
  trace.attention = attention_pool(trace.lstm.outputs, mask, attention(prefix));
  return trace;
}

BodyTrace HierarchicalModel::body_forward(const EncodedEmail& email,
                                          const ForwardOptions& options) const {
  const std::size_t rows = email.max_sentences;
  const bool drop = options.rng && options.dropout > 0.0;
  const std::size_t dim = 2 * config_.cell_size;
  BodyTrace trace;
  trace.sentence_mask = email.sentence_mask;
  trace.sentences.resize(rows);
  trace.sentence_dropout.resize(rows);
  std::vector<Vec> sentence_inputs(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!email.sentence_mask[i]) continue;
    trace.sentences[i] = word_pipeline(kWord, email.sentence_ids(i), email.sentence_tokens_mask(i));
    Vec u = trace.sentences[i].attention.pooled;
    if (drop) {
      trace.sentence_dropout[i] = dropout_mask(dim, options.dropout, *options.rng);
      for (std::size_t k = 0; k < dim; ++k) u[k] *= trace.sentence_dropout[i][k];
    }
    sentence_inputs[i] = std::move(u);
  }
  trace.lstm = bilstm(std::move(sentence_inputs), email.sentence_mask, lstm(kSentence + ".fwd"),
                      lstm(kSentence + ".bwd"));
  trace.attention = attention_pool(trace.lstm.outputs, email.sentence_mask, attention(kSentence));
  return trace;
}

SequenceTrace HierarchicalModel::header_forward(const EncodedEmail& email) const {
  if (!config_.use_header) throw ConfigError("model was built without a header network");
  if (!email.has_header) throw ConfigError("header network requires an email with a header");
  return word_pipeline(kHeader, email.header_ids, email.header_mask);
}

ForwardTrace HierarchicalModel::forward(const EncodedEmail& email,
                                        const ForwardOptions& options) const {
  if (config_.use_header && !email.has_header) {
    throw ConfigError("model uses headers but the email has none");
  }
  ForwardTrace trace;
  trace.max_sentences = email.max_sentences;
  trace.max_words = email.max_words;
  trace.body = body_forward(email, options);
  trace.features = trace.body.attention.pooled;
  if (config_.use_header) {
    trace.header = header_forward(email);
    const Vec& rs = trace.header->attention.pooled;
    trace.features.insert(trace.features.end(), rs.begin(), rs.end());
  }

  Vec r = trace.features;
  if (options.rng && options.dropout > 0.0) {
    trace.feature_dropout = dropout_mask(r.size(), options.dropout, *options.rng);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] *= trace.feature_dropout[k];
  }
  const std::string out = output_prefix(config_.use_header);
  trace.logit = dot(params_.value(out + ".weights").values(), r) + params_.value(out + ".bias")[0];
  trace.probability = sigmoid(trace.logit);
  return trace;
}

void HierarchicalModel::sequence_backward(const std::string& prefix, const SequenceTrace& trace,
                                          std::span<const double> d_pooled,
                                          std::span<const double> d_weights) {
  const auto d_hidden = attention_backward(trace.attention, trace.lstm.outputs, d_pooled,
                                           d_weights, attention(prefix), attention_grads(prefix));
  const auto d_inputs =
      bilstm_backward(trace.lstm, d_hidden, lstm(prefix + ".fwd"), lstm_grads(prefix + ".fwd"),
                      lstm(prefix + ".bwd"), lstm_grads(prefix + ".bwd"));
  Matrix& table_grad = params_.grad(prefix + ".embedding");
  for (std::size_t j = 0; j < trace.ids.size(); ++j) {
    if (!trace.lstm.mask[j]) continue;
    const auto id = static_cast<std::size_t>(trace.ids[j]);
    if (id == static_cast<std::size_t>(Vocabulary::kPad)) continue;
    axpy(1.0, d_inputs[j], table_grad.row(id));
  }
}

void HierarchicalModel::backward(const ForwardTrace& trace, const Upstream& upstream) {
  const bool header = trace.header.has_value();
  if (header != config_.use_header) throw InternalError("backward: trace/model header mismatch");
  const bool has_d_alpha = !upstream.d_word_attention.empty();
  if (has_d_alpha && (upstream.d_word_attention.rows() != trace.max_sentences ||
                      upstream.d_word_attention.cols() != trace.max_words)) {
    throw InternalError("backward: attention gradient shape mismatch");
  }

  const std::string out = output_prefix(config_.use_header);
  const Matrix& w_out = params_.value(out + ".weights");
  if (w_out.size() != trace.features.size()) throw InternalError("backward: feature size mismatch");
  Vec r = trace.features;
  Vec d_r(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double keep = trace.feature_dropout.empty() ? 1.0 : trace.feature_dropout[k];
    r[k] *= keep;
    d_r[k] = upstream.d_logit * w_out[k] * keep;
  }
  axpy(upstream.d_logit, r, params_.grad(out + ".weights").values());
  params_.grad(out + ".bias")[0] += upstream.d_logit;

  const std::size_t dim = 2 * config_.cell_size;
  const std::span<const double> d_rb(d_r.data(), dim);
  if (header) sequence_backward(kHeader, *trace.header, std::span(d_r).subspan(dim), {});

  // Sentence level.
  const BodyTrace& body = trace.body;
  const auto d_hhat = attention_backward(body.attention, body.lstm.outputs, d_rb, {},
                                         attention(kSentence), attention_grads(kSentence));
  const auto d_u = bilstm_backward(body.lstm, d_hhat, lstm(kSentence + ".fwd"),
                                   lstm_grads(kSentence + ".fwd"), lstm(kSentence + ".bwd"),
                                   lstm_grads(kSentence + ".bwd"));

  // Word level, one sentence at a time.
  for (std::size_t i = 0; i < body.sentences.size(); ++i) {
    if (!body.sentence_mask[i]) continue;
    Vec d_pooled = d_u[i];
    if (!body.sentence_dropout[i].empty()) {
      for (std::size_t k = 0; k < dim; ++k) d_pooled[k] *= body.sentence_dropout[i][k];
    }
    std::span<const double> d_alpha;
    if (has_d_alpha) d_alpha = upstream.d_word_attention.row(i);
    sequence_backward(kWord, body.sentences[i], d_pooled, d_alpha);
  }
}

}  // namespace hlstm
