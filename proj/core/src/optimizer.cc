#include "hlstm/optimizer.h"

#include <cmath>

#include "hlstm/error.h"

namespace hlstm {

void adam_step(ParamStore& params, AdamState& state) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (auto& [name, param] : params) {
    if (!param.grad.same_shape(param.value)) {
      throw InternalError("adam_step: gradient shape mismatch for " + name);
    }
    auto [it, inserted] = state.moments.try_emplace(name);
    AdamMoments& m = it->second;
    if (inserted) {
      m.first = Matrix(param.value.rows(), param.value.cols());
      m.second = Matrix(param.value.rows(), param.value.cols());
    } else if (!m.first.same_shape(param.value) || !m.second.same_shape(param.value)) {
      throw InternalError("adam_step: moment shape mismatch for " + name);
    }

    auto& w = param.value.values();
    const auto& g = param.grad.values();
    auto& m1 = m.first.values();
    auto& m2 = m.second.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m1[i] = state.beta1 * m1[i] + (1.0 - state.beta1) * g[i];
      m2[i] = state.beta2 * m2[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m1[i] / correction1;
      const double v_hat = m2[i] / correction2;
      w[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

std::map<std::string, double> clip_frobenius(ParamStore& params, double threshold,
                                             ClipMode mode) {
  if (!(threshold > 0.0)) throw ConfigError("clip threshold must be positive");
  std::map<std::string, double> factors;
  for (auto& [name, param] : params) {
    double factor = 1.0;
    if (!param.is_embedding) {
      Matrix& target = mode == ClipMode::kGradient ? param.grad : param.value;
      const double norm = target.frobenius_norm();
      if (norm > threshold) {
        factor = threshold / norm;
        target.scale(factor);
      }
    }
    factors[name] = factor;
  }
  return factors;
}

}  // namespace hlstm
