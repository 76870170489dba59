#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hlstm {

struct Email {
  std::string id;
  std::optional<std::string> header;
  std::string body;
  // 1 = phishing, 0 = legitimate.
  std::optional<int> label;

  friend bool operator==(const Email&, const Email&) = default;
};

struct Dataset {
  std::vector<Email> emails;
  bool has_headers = false;

  std::size_t size() const { return emails.size(); }
  bool empty() const { return emails.empty(); }
  std::size_t count_label(int label) const;
  bool fully_labeled() const;

  // Subset in the order of `indices`; has_headers is recomputed.
  Dataset subset(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class CorpusLayout {
  kTwoDirs,  // <root>/legit/*.txt and <root>/phish/*.txt
  kCsv,      // id,header,body,label with an RFC 4180 header row
};

struct LoadOptions {
  // Return an empty dataset instead of failing when nothing is loaded.
  bool allow_empty = false;
};

// Loads a corpus. Bodies that are blank after trimming are dropped with a
// warning. Throws IoError for unreadable paths, FormatError for malformed
// CSV (naming the row) and Error("empty corpus") when nothing remains.
Dataset load_corpus(const std::filesystem::path& root, CorpusLayout layout,
                    const LoadOptions& options = {});

// Directory -> two-dirs, anything else -> csv.
CorpusLayout detect_layout(const std::filesystem::path& root);

// Writes a dataset in the CSV layout (used by tools and tests).
void write_corpus_csv(const Dataset& dataset, const std::filesystem::path& path);

// Parses RFC 4180 CSV text into records. Quoted fields may contain commas,
// doubled quotes and newlines. Throws FormatError on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

struct FoldAssignment {
  std::size_t k = 0;
  std::map<std::string, std::size_t> fold_of;

  // Indices (into the dataset) of the emails in fold `fold`, dataset order.
  std::vector<std::size_t> test_indices(const Dataset& dataset, std::size_t fold) const;
  std::vector<std::size_t> train_indices(const Dataset& dataset, std::size_t fold) const;
};

// Per-class seeded shuffle followed by a round-robin deal that continues
// across classes, so fold sizes and per-class counts each differ by at most
// one. Unlabeled emails are dealt as a third class.
FoldAssignment stratified_kfold(const Dataset& dataset, std::size_t k, std::uint64_t seed);

// Stratified holdout: returns (train indices, held-out indices) with
// round(fraction * class size) of each class held out.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Dataset& dataset, double fraction, std::uint64_t seed);

}  // namespace hlstm
