#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "hlstm/param_store.h"

namespace hlstm {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Compares the gradients already stored in `params` against central
// differences (f(x+eps) - f(x-eps)) / 2eps of `loss`, entry by entry.
// Relative error is |a - n| / max(1e-8, |a| + |n|). Parameter values are
// restored after each probe. Throws Error if the loss is ever non-finite.
GradCheckResult finite_diff_check(ParamStore& params,
                                  const std::function<double(const ParamStore&)>& loss,
                                  double eps = 1e-5);

}  // namespace hlstm
