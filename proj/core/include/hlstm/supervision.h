#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hlstm/corpus.h"
#include "hlstm/matrix.h"
#include "hlstm/textprep.h"

namespace hlstm {

struct WordImportance {
  std::string token;
  std::size_t phishing_freq = 0;  // phishing emails containing the token
  std::size_t legit_freq = 0;     // legitimate emails containing the token
  std::size_t phishing_rank = 0;  // 1-based position in the descending sort
  std::size_t legit_rank = 0;
  double score = 0.0;             // legit_rank / phishing_rank

  friend bool operator==(const WordImportance&, const WordImportance&) = default;
};

// Rank-based importance of every regular vocabulary token, indexed by
// token id. PAD scores 0; UNK takes the median score of the table.
class ImportanceTable {
 public:
  ImportanceTable() = default;
  ImportanceTable(std::vector<WordImportance> words, double unk_score);

  // Entry for a regular token id (>= 2).
  const WordImportance& word(TokenId id) const { return words_.at(static_cast<std::size_t>(id) - 2); }
  const std::vector<WordImportance>& words() const { return words_; }
  double score(TokenId id) const;
  double unk_score() const { return unk_score_; }
  std::size_t size() const { return words_.size(); }

  // Entries sorted by score descending (ties: token ascending).
  std::vector<WordImportance> ranked() const;

  // TSV: token, phishing_freq, legit_freq, phishing_rank, legitimate_rank,
  // score, sorted by score descending; `top` = 0 keeps every row.
  void write_tsv(std::ostream& out, std::size_t top = 0) const;

 private:
  std::vector<WordImportance> words_;
  double unk_score_ = 0.0;
};

// Counts per-class document frequencies over each email's tokens (body and
// header), ranks tokens by each frequency (descending, ties broken by token
// ascending) and scores them. Throws ConfigError unless both classes occur.
ImportanceTable compute_ranks(const Dataset& dataset, const Vocabulary& vocab);

// Normalized importance g over the real tokens of one sentence row; zero on
// padding and for an all-padded row.
Vec sentence_scores(std::span<const TokenId> ids, std::span<const std::uint8_t> mask,
                    const ImportanceTable& table);

// g for a whole encoded body as an L x K grid.
Matrix email_scores(const EncodedEmail& email, const ImportanceTable& table);

// Sum over real tokens of real sentences of (g - alpha)^2.
double attention_penalty(const Matrix& alpha, const Matrix& scores, const EncodedEmail& email);

// d penalty / d alpha = 2 (alpha - g) on real cells, zero elsewhere.
Matrix attention_penalty_grad(const Matrix& alpha, const Matrix& scores, const EncodedEmail& email);

}  // namespace hlstm
