#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "mza/network.hpp"
#include "mza/trajectory.hpp"

namespace mza {

struct LossConfig {
  double value_loss_weight = 1.0;
  // Multiplies gradients flowing back through every dynamics input.
  // Anything other than 1.0 makes the gradient differ from the derivative.
  double dynamics_gradient_scale = 0.5;
};

struct TrainingExample {
  std::vector<double> observation;
  TrainTarget target;
  double weight = 1.0;  // importance weight
};

struct LossBreakdown {
  double total = 0.0;
  double reward = 0.0;
  double policy = 0.0;
  double value = 0.0;
  // Decoded value prediction at k = 0 for each example, for priorities.
  std::vector<double> initial_values;
};

struct LossResult {
  LossBreakdown breakdown;
  ParameterSet gradients;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Encodes each observation, unrolls the dynamics along the target actions
// and sums per step the reward, policy and (weighted) value cross-entropies;
// the reward term covers k < K, the others k <= K. The total is the mean
// over the batch of importance-weighted per-example sums. Throws
// NumericalError if the loss is not finite.
LossResult unrolled_loss(const Network& network,
                         std::span<const TrainingExample> batch,
                         const LossConfig& config, bool with_gradients = true);

}  // namespace mza
