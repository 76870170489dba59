#include "hlstm/learners.h"

#include <array>
#include <utility>

#include "hlstm/error.h"

namespace hlstm {
namespace {

constexpr std::array<std::pair<ModelKind, std::string_view>, 5> kNames{{
    {ModelKind::kHlstm, "hlstm"},
    {ModelKind::kHlstmSupervised, "hlstm-supervised"},
    {ModelKind::kSvmTfidf, "svm-tfidf"},
    {ModelKind::kSvmEmbedding, "svm-embedding"},
    {ModelKind::kSvmConcat, "svm-concat"},
}};

std::vector<int> labels_of(const Dataset& dataset) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& e : dataset.emails) {
    if (!e.label) throw ConfigError("training corpus contains an unlabeled email");
    labels.push_back(*e.label);
  }
  return labels;
}

}  // namespace

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (const auto& [kind, n] : kNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

std::string model_name(ModelKind kind) {
  for (const auto& [k, n] : kNames) {
    if (k == kind) return std::string(n);
  }
  return "unknown";
}

std::vector<std::string> model_names() {
  std::vector<std::string> out;
  for (const auto& [k, n] : kNames) out.emplace_back(n);
  return out;
}

Learner make_learner(ModelKind kind, const LearnerOptions& options) {
  if (kind == ModelKind::kHlstm || kind == ModelKind::kHlstmSupervised) {
    TrainConfig config = options.train;
    config.use_supervision = kind == ModelKind::kHlstmSupervised;
    const Embeddings* embeddings = options.embeddings;
    return [config, embeddings](const Dataset& train_set, const Dataset& test, std::size_t) {
      const TrainResult result = train(train_set, config, embeddings);
      std::vector<int> out;
      for (double p : predict(result.trained, test)) out.push_back(label_at(p));
      return out;
    };
  }

  if ((kind == ModelKind::kSvmEmbedding || kind == ModelKind::kSvmConcat) && !options.embeddings) {
    throw ConfigError(model_name(kind) + " needs --embeddings");
  }
  const std::size_t min_count = options.train.min_count;
  const SvmOptions svm = options.svm;
  const Embeddings* embeddings = options.embeddings;
  return [kind, min_count, svm, embeddings](const Dataset& train_set, const Dataset& test,
                                            std::size_t) {
    FeatureMatrix train_x;
    FeatureMatrix test_x;
    if (kind != ModelKind::kSvmEmbedding) {
      const auto vectorizer = TfidfVectorizer::fit(train_set, build_vocab(train_set, min_count));
      train_x = vectorizer.transform(train_set);
      test_x = vectorizer.transform(test);
    }
    if (kind != ModelKind::kSvmTfidf) {
      FeatureMatrix train_e = embed_mean_features(train_set, *embeddings);
      FeatureMatrix test_e = embed_mean_features(test, *embeddings);
      if (kind == ModelKind::kSvmConcat) {
        train_x = concat_features(train_x, train_e);
        test_x = concat_features(test_x, test_e);
      } else {
        train_x = std::move(train_e);
        test_x = std::move(test_e);
      }
    }
    const auto model = svm_train(train_x, labels_of(train_set), svm).model;
    return svm_predict(model, test_x);
  };
}

}  // namespace hlstm
