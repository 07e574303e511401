#include "qij/random.hpp"

#include "qij/error.hpp"

#include <cmath>

namespace qij {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

double sample_inverse_gaussian(Rng& rng, double mean, double shape) {
  if (!(mean > 0.0) || !(shape > 0.0)) {
    throw InvalidArgument("inverse Gaussian needs positive mean and shape");
  }
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  const double z = normal(rng);
  const double y = z * z;
  const double my = mean * y;
  // Roots of the transformation multiply to mean^2; take the larger one
  // directly so no cancellation occurs, then recover the smaller.
  const double larger = mean + mean * (my + std::sqrt(4.0 * shape * my + my * my)) / (2.0 * shape);
  const double smaller = mean * mean / larger;
  if (uniform(rng) <= mean / (mean + smaller)) return smaller;
  return larger;
}

}  // namespace qij
