#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hlstm/matrix.h"
#include "hlstm/param_store.h"

namespace hlstm {

struct AdamMoments {
  Matrix first;
  Matrix second;
};

struct AdamState {
  double learning_rate = 0.0025;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, AdamMoments> moments;
};

// One bias-corrected Adam update of every parameter from its gradient.
// Moment buffers are created lazily on the first call. Gradients are left
// untouched; the caller zeroes them between batches.
void adam_step(ParamStore& params, AdamState& state);

enum class ClipMode {
  kGradient,  // rescale gradient matrices whose Frobenius norm exceeds the threshold
  kWeight,    // rescale the weight matrices themselves (max-norm constraint)
};

// Rescales each non-embedding matrix with Frobenius norm above `threshold`
// down to exactly `threshold`. Returns the factor applied per parameter
// (1.0 when untouched, embeddings included).
std::map<std::string, double> clip_frobenius(ParamStore& params, double threshold,
                                             ClipMode mode = ClipMode::kGradient);

}  // namespace hlstm
