#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "hlstm/matrix.h"

namespace hlstm {

struct Parameter {
  Matrix value;
  Matrix grad;
  // Embedding tables are exempt from gradient clipping.
  bool is_embedding = false;
};

// Named trainable parameters with gradient buffers of matching shape.
// Iteration order is lexicographic by name, which fixes the layout of
// checkpoints and the order of finite-difference sweeps.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Matrix value, bool is_embedding = false);

  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Matrix& value(const std::string& name) { return at(name).value; }
  const Matrix& value(const std::string& name) const { return at(name).value; }
  Matrix& grad(const std::string& name) { return at(name).grad; }

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  // Total scalar count across all parameters.
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;

  void zero_grads();
  // True when both stores have the same names, shapes, flags and values.
  bool same_values(const ParamStore& other) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace hlstm
