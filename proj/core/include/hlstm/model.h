#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hlstm/dropout.h"
#include "hlstm/embeddings.h"
#include "hlstm/layers.h"
#include "hlstm/matrix.h"
#include "hlstm/param_store.h"
#include "hlstm/textprep.h"

namespace hlstm {

struct ModelConfig {
  std::size_t vocab_size = 2;
  std::size_t embed_dim = 300;
  std::size_t cell_size = 60;
  std::size_t attention_size = 60;
  bool use_header = false;
  // Weights are drawn from U(-init_scale, init_scale).
  double init_scale = 0.08;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Word-level pipeline over one token sequence: embedding, BiLSTM, attention.
struct SequenceTrace {
  std::vector<TokenId> ids;
  BiLstmTrace lstm;
  AttentionTrace attention;
};

struct BodyTrace {
  Mask sentence_mask;
  std::vector<SequenceTrace> sentences;  // L entries; empty for padded rows
  std::vector<Vec> sentence_dropout;     // per real sentence, empty when off
  BiLstmTrace lstm;                      // sentence-level BiLSTM over u_hat
  AttentionTrace attention;              // sentence-level attention (beta)
};

struct ForwardTrace {
  std::size_t max_sentences = 0;
  std::size_t max_words = 0;
  BodyTrace body;
  std::optional<SequenceTrace> header;
  Vec features;          // r = r_b or [r_b ; r_s], before dropout
  Vec feature_dropout;   // empty when off
  double logit = 0.0;
  double probability = 0.5;

  const Vec& body_representation() const { return body.attention.pooled; }
  // Word attention alpha as an L x K grid (zero on padding).
  Matrix word_attention() const;
  const Vec& sentence_attention() const { return body.attention.weights; }
};

struct ForwardOptions {
  double dropout = 0.0;
  Rng* rng = nullptr;  // dropout is applied only when set and dropout > 0
};

// Gradients arriving from the loss: dL/dlogit plus an optional L x K grid of
// dL/dalpha for losses defined on the word attention distribution.
struct Upstream {
  double d_logit = 0.0;
  Matrix d_word_attention;
};

// Hierarchical attentive BiLSTM classifier: body network (word level and
// sentence level) and optional header network, followed by a logistic
// output unit.
class HierarchicalModel {
 public:
  explicit HierarchicalModel(const ModelConfig& config, std::uint64_t seed = 0);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Replaces the model's parameters, e.g. after loading a checkpoint.
  void set_params(ParamStore params);

  // Copies pretrained vectors into both embedding tables for every
  // vocabulary token present in `embeddings`. Returns the number of hits.
  std::size_t load_pretrained(const Vocabulary& vocab, const Embeddings& embeddings);

  SequenceTrace word_pipeline(const std::string& prefix, std::span<const TokenId> ids,
                              std::span<const std::uint8_t> mask) const;
  BodyTrace body_forward(const EncodedEmail& email, const ForwardOptions& options = {}) const;
  SequenceTrace header_forward(const EncodedEmail& email) const;

  ForwardTrace forward(const EncodedEmail& email, const ForwardOptions& options = {}) const;
  double predict_proba(const EncodedEmail& email) const { return forward(email).probability; }

  // Accumulates exact gradients of the upstream loss into params().
  void backward(const ForwardTrace& trace, const Upstream& upstream);

 private:
  void init_parameters(std::uint64_t seed);
  LstmWeights lstm(const std::string& prefix) const;
  LstmGrads lstm_grads(const std::string& prefix);
  AttentionWeights attention(const std::string& prefix) const;
  AttentionGrads attention_grads(const std::string& prefix);
  void sequence_backward(const std::string& prefix, const SequenceTrace& trace,
                         std::span<const double> d_pooled, std::span<const double> d_weights);

  ModelConfig config_;
  ParamStore params_;
};

}  // namespace hlstm
