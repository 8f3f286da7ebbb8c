#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mza {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds from a base
// seed and a task id so parallel and sequential runs draw identical numbers.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int n);

// Index drawn with probability proportional to weights (non-negative, not
// all zero).
int sample_categorical(std::span<const double> weights, Rng& rng);

std::vector<double> sample_dirichlet(double alpha, int n, Rng& rng);

}  // namespace mza
