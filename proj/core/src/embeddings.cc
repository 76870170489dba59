#include "hlstm/embeddings.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "hlstm/error.h"

namespace hlstm {

Embeddings load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read embeddings " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError("embeddings file is empty: " + path.string());
  std::istringstream head(line);
  std::size_t count = 0;
  Embeddings emb;
  if (!(head >> count >> emb.dim) || emb.dim == 0) {
    throw FormatError("embeddings header must be '<count> <dim>': " + path.string());
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string token;
    row >> token;
    Vec v(emb.dim);
    for (auto& x : v) {
      if (!(row >> x) || !std::isfinite(x)) {
        throw FormatError(fmt::format("embeddings line {}: expected {} finite values", line_no,
                                      emb.dim));
      }
    }
    double extra = 0.0;
    if (row >> extra) {
      throw FormatError(fmt::format("embeddings line {}: more than {} values", line_no, emb.dim));
    }
    emb.vectors.insert_or_assign(std::move(token), std::move(v));
  }
  if (emb.vectors.size() != count) {
    throw FormatError(fmt::format("embeddings header announces {} vectors, found {}", count,
                                  emb.vectors.size()));
  }
  return emb;
}

void save_embeddings(const Embeddings& embeddings, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << embeddings.vectors.size() << ' ' << embeddings.dim << '\n';
  const std::map<std::string, Vec> sorted(embeddings.vectors.begin(), embeddings.vectors.end());
  for (const auto& [token, v] : sorted) {
    out << token;
    for (double x : v) out << ' ' << fmt::format("{}", x);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace hlstm
