#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hlstm/corpus.h"
#include "hlstm/matrix.h"

namespace hlstm {

using TokenId = std::int32_t;

// Lowercases, splits on Unicode whitespace and peels leading/trailing
// ASCII punctuation off each word into one-character tokens.
// "Click HERE!" -> {"click", "here", "!"}.
std::vector<std::string> tokenize(std::string_view text);

// Splits a body into sentences. A sentence starts at a capitalized first
// word of a new line, or at a capitalized word right after a word ending in
// '.', '!' or '?'. Sentences of fewer than three tokens are then merged into
// their successor (the last one into its predecessor). Sentence text is the
// sentence's words joined by single spaces.
std::vector<std::string> split_sentences(std::string_view body);

// All tokens of an email: body followed by header.
std::vector<std::string> email_tokens(const Email& email);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  // Builds from regular tokens in index order (starting at index 2).
  explicit Vocabulary(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  // Regular tokens only, in index order.
  std::span<const std::string> regular_tokens() const {
    return std::span(tokens_).subspan(2);
  }

  // One token per line; line n holds index n + 2.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Every token (bodies and headers) whose corpus frequency reaches
// `min_count`, ordered by frequency descending then token ascending.
Vocabulary build_vocab(const Dataset& dataset, std::size_t min_count);

struct EncodedEmail {
  std::size_t max_sentences = 0;  // L
  std::size_t max_words = 0;      // K
  std::size_t max_header = 0;     // H
  std::vector<TokenId> body_ids;  // L x K, row-major
  Mask body_mask;                 // L x K
  Mask sentence_mask;             // L
  bool has_header = false;
  std::vector<TokenId> header_ids;  // H
  Mask header_mask;                 // H
  std::optional<int> label;

  TokenId body_id(std::size_t i, std::size_t j) const { return body_ids[i * max_words + j]; }
  std::span<const TokenId> sentence_ids(std::size_t i) const {
    return std::span(body_ids).subspan(i * max_words, max_words);
  }
  std::span<const std::uint8_t> sentence_tokens_mask(std::size_t i) const {
    return std::span(body_mask).subspan(i * max_words, max_words);
  }
  std::size_t real_sentence_count() const;
};

// Keeps the first L sentences and the first K tokens of each, the first H
// header tokens; pads with PAD and maps unknown tokens to UNK.
EncodedEmail encode_email(const Email& email, const Vocabulary& vocab, std::size_t max_sentences,
                          std::size_t max_words, std::size_t max_header);

}  // namespace hlstm
