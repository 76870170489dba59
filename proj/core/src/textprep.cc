#include "hlstm/textprep.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "hlstm/error.h"
#include "utf8.h"

namespace hlstm {
namespace {

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_capitalized(std::string_view word) { return !word.empty() && word[0] >= 'A' && word[0] <= 'Z'; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

struct Word {
  std::string_view text;
  bool starts_line = false;
};

// Whitespace-separated words; starts_line marks the first word of every
// line after the first non-empty one.
std::vector<Word> split_words(std::string_view text) {
  std::vector<Word> words;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  bool newline_pending = false;
  auto flush = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    words.push_back({text.substr(start, end - start), newline_pending && !words.empty()});
    newline_pending = false;
    start = std::string_view::npos;
  };
  while (pos < text.size()) {
    std::size_t len = 1;
    const char32_t cp = utf8::decode(text, pos, &len);
    if (utf8::is_space(cp)) {
      flush(pos);
      if (cp == U'\n' || cp == 0x2028 || cp == 0x2029 || cp == 0x85) newline_pending = true;
    } else if (start == std::string_view::npos) {
      start = pos;
    }
    pos += len;
  }
  flush(text.size());
  return words;
}

void tokenize_word(std::string_view word, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = word.size();
  while (begin < end && is_ascii_punct(word[begin])) {
    out.emplace_back(1, word[begin]);
    ++begin;
  }
  std::vector<std::string> trailing;
  while (end > begin && is_ascii_punct(word[end - 1])) {
    trailing.emplace_back(1, word[end - 1]);
    --end;
  }
  if (end > begin) out.push_back(ascii_lower(word.substr(begin, end - begin)));
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

std::string join(const std::vector<std::string_view>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::size_t token_count(std::string_view text) { return tokenize(text).size(); }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const auto& word : split_words(text)) tokenize_word(word.text, tokens);
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view body) {
  const auto words = split_words(body);
  std::vector<std::vector<std::string_view>> raw;
  for (std::size_t w = 0; w < words.size(); ++w) {
    bool boundary = w == 0;
    if (w > 0 && is_capitalized(words[w].text)) {
      const auto prev = words[w - 1].text;
      boundary = words[w].starts_line || is_sentence_end(prev.back());
    }
    if (boundary) raw.emplace_back();
    raw.back().push_back(words[w].text);
  }

  // Merge pass: short sentences accumulate into the next one.
  std::vector<std::string> sentences;
  std::string pending;
  for (std::size_t s = 0; s < raw.size(); ++s) {
    std::string current = pending.empty() ? join(raw[s]) : pending + ' ' + join(raw[s]);
    const bool last = s + 1 == raw.size();
    if (token_count(current) < 3 && !last) {
      pending = std::move(current);
      continue;
    }
    pending.clear();
    if (last && token_count(current) < 3 && !sentences.empty()) {
      sentences.back() += ' ' + current;
    } else {
      sentences.push_back(std::move(current));
    }
  }
  return sentences;
}

std::vector<std::string> email_tokens(const Email& email) {
  auto tokens = tokenize(email.body);
  if (email.header) {
    auto header = tokenize(*email.header);
    tokens.insert(tokens.end(), header.begin(), header.end());
  }
  return tokens;
}

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) {
    if (t.empty() || index_.count(t)) {
      throw FormatError("vocabulary token is empty or duplicated: '" + t + "'");
    }
    add(t);
  }
}

void Vocabulary::add(std::string token) {
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : regular_tokens()) out << t << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocabulary(tokens);
}

Vocabulary build_vocab(const Dataset& dataset, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& email : dataset.emails) {
    for (auto& t : email_tokens(email)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, n] : counts) {
    if (n >= min_count && token != Vocabulary::kPadToken && token != Vocabulary::kUnkToken) {
      kept.emplace_back(token, n);
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, n] : kept) tokens.push_back(std::move(token));
  return Vocabulary(tokens);
}

std::size_t EncodedEmail::real_sentence_count() const {
  return static_cast<std::size_t>(std::count(sentence_mask.begin(), sentence_mask.end(), 1));
}

EncodedEmail encode_email(const Email& email, const Vocabulary& vocab, std::size_t max_sentences,
                          std::size_t max_words, std::size_t max_header) {
  if (max_sentences == 0 || max_words == 0 || max_header == 0) {
    throw ConfigError("encode_email: L, K and H must be at least 1");
  }
  EncodedEmail enc;
  enc.max_sentences = max_sentences;
  enc.max_words = max_words;
  enc.max_header = max_header;
  enc.body_ids.assign(max_sentences * max_words, Vocabulary::kPad);
  enc.body_mask.assign(max_sentences * max_words, 0);
  enc.sentence_mask.assign(max_sentences, 0);
  enc.header_ids.assign(max_header, Vocabulary::kPad);
  enc.header_mask.assign(max_header, 0);
  enc.label = email.label;

  std::size_t row = 0;
  for (const auto& sentence : split_sentences(email.body)) {
    if (row == max_sentences) break;
    const auto tokens = tokenize(sentence);
    if (tokens.empty()) continue;
    const std::size_t n = std::min(tokens.size(), max_words);
    for (std::size_t j = 0; j < n; ++j) {
      enc.body_ids[row * max_words + j] = vocab.id(tokens[j]);
      enc.body_mask[row * max_words + j] = 1;
    }
    enc.sentence_mask[row] = 1;
    ++row;
  }

  if (email.header) {
    enc.has_header = true;
    const auto tokens = tokenize(*email.header);
    const std::size_t n = std::min(tokens.size(), max_header);
    for (std::size_t j = 0; j < n; ++j) {
      enc.header_ids[j] = vocab.id(tokens[j]);
      enc.header_mask[j] = 1;
    }
  }
  return enc;
}

}  // namespace hlstm
