#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>

#include "hlstm/matrix.h"

namespace hlstm {

// Pretrained word vectors in the common text interchange format:
// a "<count> <dim>" line, then "<token> v1 ... v_dim" per line.
struct Embeddings {
  std::size_t dim = 0;
  std::unordered_map<std::string, Vec> vectors;

  const Vec* find(const std::string& token) const {
    auto it = vectors.find(token);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

Embeddings load_embeddings(const std::filesystem::path& path);
void save_embeddings(const Embeddings& embeddings, const std::filesystem::path& path);

}  // namespace hlstm
