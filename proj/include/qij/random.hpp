#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qij {

using Rng = std::mt19937_64;

/// Mixes a master seed with a path of stream keys (replicate index, chain,
/// purpose tag, ...) into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

/// Stream purpose tags for derive_seed.
enum class Stream : std::uint64_t {
  data = 1,
  fixed_sampler = 2,
  estimated_sampler = 3,
  bootstrap = 4,
  chain = 5,
  replicate = 6,
  custom = 7,
};

inline std::uint64_t key(Stream s) { return static_cast<std::uint64_t>(s); }

/// Inverse-Gaussian variate with the given mean and shape
/// (Michael, Schucany and Haas transformation).
double sample_inverse_gaussian(Rng& rng, double mean, double shape);

}  // namespace qij
