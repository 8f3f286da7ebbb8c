#include "mza/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace mza {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

int uniform_int(Rng& rng, int n) {
  return static_cast<int>(uniform01(rng) * n);
}

int sample_categorical(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) {
    throw std::invalid_argument("categorical weights sum to zero");
  }
  double u = uniform01(rng) * total;
  int last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    if (u < weights[i]) return last_positive;
    u -= weights[i];
  }
  return last_positive;
}

std::vector<double> sample_dirichlet(double alpha, int n, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> x(n);
  double total = 0.0;
  for (auto& v : x) {
    v = gamma(rng);
    total += v;
  }
  if (total <= 0.0) {
    // Every draw underflowed; fall back to a uniform point of the simplex.
    for (auto& v : x) v = 1.0 / n;
    return x;
  }
  for (auto& v : x) v /= total;
  return x;
}

}  // namespace mza
