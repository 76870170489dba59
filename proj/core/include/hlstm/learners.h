#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hlstm/baseline.h"
#include "hlstm/embeddings.h"
#include "hlstm/eval.h"
#include "hlstm/train.h"

namespace hlstm {

enum class ModelKind { kHlstm, kHlstmSupervised, kSvmTfidf, kSvmEmbedding, kSvmConcat };

// "hlstm", "hlstm-supervised", "svm-tfidf", "svm-embedding", "svm-concat".
std::optional<ModelKind> parse_model_kind(std::string_view name);
std::string model_name(ModelKind kind);
std::vector<std::string> model_names();

struct LearnerOptions {
  TrainConfig train;
  SvmOptions svm;
  // Required by svm-embedding and svm-concat; optional for the H-LSTMs.
  const Embeddings* embeddings = nullptr;
};

// Wraps a model family as a Learner for cross_validate and train/test runs.
// The hlstm kinds differ only in whether supervised attention is enabled.
Learner make_learner(ModelKind kind, const LearnerOptions& options);

}  // namespace hlstm
