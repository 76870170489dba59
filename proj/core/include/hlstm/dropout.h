#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "hlstm/matrix.h"

namespace hlstm {

using Rng = std::mt19937_64;

// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
// 1/(1-rate). Throws ConfigError unless 0 <= rate < 1.
Vec dropout_mask(std::size_t size, double rate, Rng& rng);
Vec dropout_mask(std::size_t size, double rate, std::uint64_t seed);

}  // namespace hlstm
