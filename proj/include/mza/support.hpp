#pragma once

#include <span>
#include <vector>

namespace mza {

// Categorical representation of scalars on integer atoms
// -support_size..+support_size, applied after an invertible contraction.
struct SupportSpec {
  int support_size = 10;
  double epsilon = 0.001;

  int atom_count() const { return 2 * support_size + 1; }
};

// h(x) = sign(x) * (sqrt(|x| + 1) - 1) + eps * x
double contract(double x, double epsilon);
double expand(double y, double epsilon);

// Two-hot encoding of a value already on the atom scale, clamped to
// [-support_size, support_size].
std::vector<double> two_hot(double y, const SupportSpec& spec);

std::vector<double> scalar_to_support(double x, const SupportSpec& spec);

// Expectation over atoms followed by the inverse contraction. Throws
// std::invalid_argument on negative probabilities or a size mismatch.
double support_to_scalar(std::span<const double> probs,
                         const SupportSpec& spec);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

// Decodes value or reward logits straight to a scalar.
double logits_to_scalar(std::span<const double> logits,
                        const SupportSpec& spec);

}  // namespace mza
