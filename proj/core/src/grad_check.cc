#include "hlstm/grad_check.h"

#include <algorithm>
#include <cmath>

#include "hlstm/error.h"

namespace hlstm {

GradCheckResult finite_diff_check(ParamStore& params,
                                  const std::function<double(const ParamStore&)>& loss,
                                  double eps) {
  auto evaluate = [&] {
    const double f = loss(params);
    if (!std::isfinite(f)) throw Error("finite_diff_check: loss is not finite");
    return f;
  };
  evaluate();

  GradCheckResult result;
  for (auto& [name, param] : params) {
    auto& values = param.value.values();
    const auto& grads = param.grad.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = evaluate();
      values[i] = saved - eps;
      const double minus = evaluate();
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double analytic = grads[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++result.entries_checked;
      if (rel > result.max_relative_error || result.entries_checked == 1) {
        result.max_relative_error = std::max(rel, result.max_relative_error);
        result.worst_parameter = name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace hlstm
