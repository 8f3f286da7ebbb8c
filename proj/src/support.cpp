#include "mza/support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mza {

double contract(double x, double epsilon) {
  const double sign = x < 0.0 ? -1.0 : (x > 0.0 ? 1.0 : 0.0);
  return sign * (std::sqrt(std::abs(x) + 1.0) - 1.0) + epsilon * x;
}

double expand(double y, double epsilon) {
  const double sign = y < 0.0 ? -1.0 : (y > 0.0 ? 1.0 : 0.0);
  const double root =
      (std::sqrt(1.0 + 4.0 * epsilon * (std::abs(y) + 1.0 + epsilon)) - 1.0) /
      (2.0 * epsilon);
  return sign * (root * root - 1.0);
}

std::vector<double> two_hot(double y, const SupportSpec& spec) {
  const double s = spec.support_size;
  y = std::clamp(y, -s, s);
  std::vector<double> out(spec.atom_count(), 0.0);
  const double lower = std::floor(y);
  const double upper_weight = y - lower;
  const int lower_index = static_cast<int>(lower) + spec.support_size;
  out[lower_index] = 1.0 - upper_weight;
  if (upper_weight > 0.0) out[lower_index + 1] = upper_weight;
  return out;
}

std::vector<double> scalar_to_support(double x, const SupportSpec& spec) {
  return two_hot(contract(x, spec.epsilon), spec);
}

double support_to_scalar(std::span<const double> probs,
                         const SupportSpec& spec) {
  if (static_cast<int>(probs.size()) != spec.atom_count()) {
    throw std::invalid_argument("support vector has the wrong length");
  }
  double y = 0.0;
  for (int i = 0; i < spec.atom_count(); ++i) {
    if (probs[i] < 0.0) {
      throw std::invalid_argument("negative support probability");
    }
    y += probs[i] * (i - spec.support_size);
  }
  return expand(y, spec.epsilon);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (auto& v : out) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

double logits_to_scalar(std::span<const double> logits,
                        const SupportSpec& spec) {
  const auto probs = softmax(logits);
  return support_to_scalar(probs, spec);
}

}  // namespace mza
