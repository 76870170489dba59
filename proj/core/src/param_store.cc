#include "hlstm/param_store.h"

#include <utility>

#include "hlstm/error.h"

namespace hlstm {

Parameter& ParamStore::add(const std::string& name, Matrix value, bool is_embedding) {
  if (params_.count(name)) throw InternalError("duplicate parameter: " + name);
  Parameter p;
  p.grad = Matrix(value.rows(), value.cols());
  p.value = std::move(value);
  p.is_embedding = is_embedding;
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw InternalError("unknown parameter: " + name);
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw InternalError("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.is_embedding != b->second.is_embedding ||
        !(a->second.value == b->second.value)) {
      return false;
    }
  }
  return true;
}

}  // namespace hlstm
