#include "hlstm/supervision.h"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "hlstm/error.h"

namespace hlstm {

ImportanceTable::ImportanceTable(std::vector<WordImportance> words, double unk_score)
    : words_(std::move(words)), unk_score_(unk_score) {}

double ImportanceTable::score(TokenId id) const {
  if (id == Vocabulary::kPad) return 0.0;
  if (id == Vocabulary::kUnk) return unk_score_;
  return word(id).score;
}

std::vector<WordImportance> ImportanceTable::ranked() const {
  std::vector<WordImportance> out = words_;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.token < b.token;
  });
  return out;
}

void ImportanceTable::write_tsv(std::ostream& out, std::size_t top) const {
  out << "token\tphishing_freq\tlegit_freq\tphishing_rank\tlegitimate_rank\tscore\n";
  const auto rows = ranked();
  const std::size_t n = top == 0 ? rows.size() : std::min(top, rows.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = rows[i];
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{:.6f}\n", w.token, w.phishing_freq, w.legit_freq,
                       w.phishing_rank, w.legit_rank, w.score);
  }
}

namespace {

// 1-based ranks from a descending sort of `freq`, ties by token ascending.
std::vector<std::size_t> ranks_by(const std::vector<WordImportance>& words,
                                  std::size_t WordImportance::*freq) {
  std::vector<std::size_t> order(words.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (words[a].*freq != words[b].*freq) return words[a].*freq > words[b].*freq;
    return words[a].token < words[b].token;
  });
  std::vector<std::size_t> rank(words.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

}  // namespace

ImportanceTable compute_ranks(const Dataset& dataset, const Vocabulary& vocab) {
  if (dataset.count_label(1) == 0 || dataset.count_label(0) == 0) {
    throw ConfigError("importance scores need both phishing and legitimate emails");
  }
  std::vector<WordImportance> words;
  words.reserve(vocab.size() - 2);
  for (const auto& token : vocab.regular_tokens()) words.push_back({.token = token});

  for (const auto& email : dataset.emails) {
    if (!email.label) continue;
    std::set<TokenId> present;
    for (const auto& t : email_tokens(email)) {
      const TokenId id = vocab.id(t);
      if (id >= 2) present.insert(id);
    }
    for (TokenId id : present) {
      auto& w = words[static_cast<std::size_t>(id) - 2];
      (*email.label == 1 ? w.phishing_freq : w.legit_freq) += 1;
    }
  }

  const auto phishing = ranks_by(words, &WordImportance::phishing_freq);
  const auto legit = ranks_by(words, &WordImportance::legit_freq);
  std::vector<double> scores;
  scores.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    words[i].phishing_rank = phishing[i];
    words[i].legit_rank = legit[i];
    words[i].score = static_cast<double>(legit[i]) / static_cast<double>(phishing[i]);
    scores.push_back(words[i].score);
  }

  double median = 1.0;
  if (!scores.empty()) {
    std::sort(scores.begin(), scores.end());
    const std::size_t mid = scores.size() / 2;
    median = scores.size() % 2 ? scores[mid] : 0.5 * (scores[mid - 1] + scores[mid]);
  }
  return ImportanceTable(std::move(words), median);
}

Vec sentence_scores(std::span<const TokenId> ids, std::span<const std::uint8_t> mask,
                    const ImportanceTable& table) {
  if (ids.size() != mask.size()) throw InternalError("sentence_scores: length mismatch");
  Vec g(ids.size(), 0.0);
  double total = 0.0;
  std::size_t real = 0;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (!mask[j]) continue;
    g[j] = table.score(ids[j]);
    total += g[j];
    ++real;
  }
  if (real == 0) return g;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (!mask[j]) continue;
    g[j] = total > 0.0 ? g[j] / total : 1.0 / static_cast<double>(real);
  }
  return g;
}

Matrix email_scores(const EncodedEmail& email, const ImportanceTable& table) {
  Matrix g(email.max_sentences, email.max_words);
  for (std::size_t i = 0; i < email.max_sentences; ++i) {
    if (!email.sentence_mask[i]) continue;
    const Vec row = sentence_scores(email.sentence_ids(i), email.sentence_tokens_mask(i), table);
    std::copy(row.begin(), row.end(), g.row(i).begin());
  }
  return g;
}

namespace {

void check_shapes(const Matrix& alpha, const Matrix& scores, const EncodedEmail& email) {
  if (!alpha.same_shape(scores) || alpha.rows() != email.max_sentences ||
      alpha.cols() != email.max_words) {
    throw InternalError("attention_penalty: shape mismatch between alpha, scores and email");
  }
}

}  // namespace

double attention_penalty(const Matrix& alpha, const Matrix& scores, const EncodedEmail& email) {
  check_shapes(alpha, scores, email);
  double penalty = 0.0;
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    if (!email.sentence_mask[i]) continue;
    for (std::size_t j = 0; j < alpha.cols(); ++j) {
      if (!email.body_mask[i * alpha.cols() + j]) continue;
      const double d = scores(i, j) - alpha(i, j);
      penalty += d * d;
    }
  }
  return penalty;
}

Matrix attention_penalty_grad(const Matrix& alpha, const Matrix& scores,
                              const EncodedEmail& email) {
  check_shapes(alpha, scores, email);
  Matrix grad(alpha.rows(), alpha.cols());
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    if (!email.sentence_mask[i]) continue;
    for (std::size_t j = 0; j < alpha.cols(); ++j) {
      if (!email.body_mask[i * alpha.cols() + j]) continue;
      grad(i, j) = 2.0 * (alpha(i, j) - scores(i, j));
    }
  }
  return grad;
}

}  // namespace hlstm
