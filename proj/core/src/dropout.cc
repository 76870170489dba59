#include "hlstm/dropout.h"

#include "hlstm/error.h"

namespace hlstm {

Vec dropout_mask(std::size_t size, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  Vec mask(size, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) {
    // Top 53 bits of the engine output as a uniform double in [0, 1).
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < rate ? 0.0 : keep_scale;
  }
  return mask;
}

Vec dropout_mask(std::size_t size, double rate, std::uint64_t seed) {
  Rng rng(seed);
  return dropout_mask(size, rate, rng);
}

}  // namespace hlstm
