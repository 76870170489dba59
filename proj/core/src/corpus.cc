#include "hlstm/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hlstm/error.h"
#include "utf8.h"

namespace hlstm {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_blank(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = 1;
    const char32_t cp = utf8::decode(text, pos, &len);
    if (!utf8::is_space(cp)) return false;
    pos += len;
  }
  return true;
}

// Appends `email` unless its body is blank.
void push_email(Dataset& dataset, Email email) {
  if (is_blank(email.body)) {
    spdlog::warn("dropping email '{}': empty body", email.id);
    return;
  }
  dataset.emails.push_back(std::move(email));
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("missing directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Dataset load_two_dirs(const fs::path& root) {
  Dataset dataset;
  for (const auto& [sub, label] : {std::pair{"legit", 0}, std::pair{"phish", 1}}) {
    for (const auto& file : sorted_files(root / sub)) {
      Email email;
      email.id = std::string(sub) + "/" + file.filename().string();
      email.body = utf8::sanitize(read_file(file));
      email.label = label;
      push_email(dataset, std::move(email));
    }
  }
  return dataset;
}

Dataset load_csv(const fs::path& path) {
  if (fs::is_directory(path)) throw IoError(path.string() + " is a directory, expected a CSV file");
  const auto records = parse_csv(utf8::sanitize(read_file(path)));
  if (records.empty()) throw FormatError("CSV file has no header row: " + path.string());

  const auto& columns = records.front();
  auto column = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : it - columns.begin();
  };
  const auto id_col = column("id");
  const auto header_col = column("header");
  const auto body_col = column("body");
  const auto label_col = column("label");
  if (id_col < 0 || body_col < 0) {
    throw FormatError("CSV header row must contain at least 'id' and 'body' columns");
  }

  Dataset dataset;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() == 1 && row.front().empty()) continue;  // blank line
    if (row.size() != columns.size()) {
      throw FormatError("malformed CSV row " + std::to_string(r) + ": expected " +
                        std::to_string(columns.size()) + " fields, got " +
                        std::to_string(row.size()));
    }
    Email email;
    email.id = row[id_col];
    if (email.id.empty()) throw FormatError("malformed CSV row " + std::to_string(r) + ": empty id");
    if (!seen.insert(email.id).second) {
      throw FormatError("malformed CSV row " + std::to_string(r) + ": duplicate id '" +
                        email.id + "'");
    }
    if (header_col >= 0 && !row[header_col].empty()) email.header = row[header_col];
    email.body = row[body_col];
    if (label_col >= 0 && !row[label_col].empty()) {
      const auto& cell = row[label_col];
      if (cell != "0" && cell != "1") {
        throw FormatError("malformed CSV row " + std::to_string(r) + ": label must be 0 or 1, got '" +
                          cell + "'");
      }
      email.label = cell == "1" ? 1 : 0;
    }
    push_email(dataset, std::move(email));
  }
  return dataset;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count_if(
      emails.begin(), emails.end(), [&](const Email& e) { return e.label == label; }));
}

bool Dataset::fully_labeled() const {
  return std::all_of(emails.begin(), emails.end(),
                     [](const Email& e) { return e.label.has_value(); });
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.emails.reserve(indices.size());
  for (std::size_t i : indices) out.emails.push_back(emails.at(i));
  out.has_headers = !out.emails.empty() &&
                    std::all_of(out.emails.begin(), out.emails.end(),
                                [](const Email& e) { return e.header.has_value(); });
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  std::size_t i = 0;
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) i = 3;  // BOM
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) {
    throw FormatError("malformed CSV row " + std::to_string(records.size()) +
                      ": unterminated quoted field");
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

CorpusLayout detect_layout(const fs::path& root) {
  return fs::is_directory(root) ? CorpusLayout::kTwoDirs : CorpusLayout::kCsv;
}

Dataset load_corpus(const fs::path& root, CorpusLayout layout, const LoadOptions& options) {
  if (!fs::exists(root)) throw IoError("no such file or directory: " + root.string());
  Dataset dataset = layout == CorpusLayout::kTwoDirs ? load_two_dirs(root) : load_csv(root);
  if (dataset.empty() && !options.allow_empty) throw Error("empty corpus: " + root.string());
  dataset.has_headers = !dataset.empty() &&
                        std::all_of(dataset.emails.begin(), dataset.emails.end(),
                                    [](const Email& e) { return e.header.has_value(); });
  return dataset;
}

void write_corpus_csv(const Dataset& dataset, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,header,body,label\n";
  for (const auto& e : dataset.emails) {
    out << csv_quote(e.id) << ',' << csv_quote(e.header.value_or("")) << ','
        << csv_quote(e.body) << ',' << (e.label ? std::to_string(*e.label) : "") << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::size_t> FoldAssignment::test_indices(const Dataset& dataset,
                                                      std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (fold_of.at(dataset.emails[i].id) == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(const Dataset& dataset,
                                                       std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (fold_of.at(dataset.emails[i].id) != fold) out.push_back(i);
  }
  return out;
}

namespace {

// Indices grouped as [legitimate, phishing, unlabeled], each shuffled.
std::vector<std::vector<std::size_t>> shuffled_classes(const Dataset& dataset,
                                                       std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> classes(3);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& label = dataset.emails[i].label;
    classes[label ? static_cast<std::size_t>(*label) : 2].push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& members : classes) std::shuffle(members.begin(), members.end(), rng);
  return classes;
}

}  // namespace

FoldAssignment stratified_kfold(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold: k must be at least 2");
  if (k > dataset.size()) {
    throw ConfigError("stratified_kfold: k = " + std::to_string(k) + " exceeds the " +
                      std::to_string(dataset.size()) + " available emails");
  }
  FoldAssignment assignment;
  assignment.k = k;
  std::size_t next = 0;
  const auto classes = shuffled_classes(dataset, seed);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (!classes[c].empty() && classes[c].size() < k) {
      spdlog::warn("stratified_kfold: class {} has {} emails for {} folds; some folds lack it",
                   c == 2 ? std::string("unlabeled") : std::to_string(c), classes[c].size(), k);
    }
    for (std::size_t idx : classes[c]) {
      assignment.fold_of[dataset.emails[idx].id] = next;
      next = (next + 1) % k;
    }
  }
  if (assignment.fold_of.size() != dataset.size()) {
    throw ConfigError("stratified_kfold: email ids are not unique");
  }
  return assignment;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("stratified_holdout: fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> train;
  std::vector<std::size_t> held;
  for (const auto& members : shuffled_classes(dataset, seed)) {
    auto n_held = static_cast<std::size_t>(std::llround(fraction * members.size()));
    if (members.size() >= 2) n_held = std::clamp<std::size_t>(n_held, 1, members.size() - 1);
    else n_held = 0;
    held.insert(held.end(), members.begin(), members.begin() + n_held);
    train.insert(train.end(), members.begin() + n_held, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(held.begin(), held.end());
  return {train, held};
}

}  // namespace hlstm
