#pragma once

#include <cstdint>

#include "mza/tensor.hpp"

namespace mza {

// lr(t) = initial * decay_rate^(t / decay_steps). A decay_steps of zero
// disables decay.
struct LearningRateSchedule {
  double initial = 0.02;
  double decay_rate = 0.1;
  std::int64_t decay_steps = 50000;

  double at(std::int64_t step) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled: applied as lr * weight_decay * w, outside the moment estimates.
  double weight_decay = 1e-4;
};

struct AdamState {
  std::int64_t step = 0;
  ParameterSet first_moment;
  ParameterSet second_moment;

  static AdamState for_params(const ParameterSet& params);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One Adam update with decoupled weight decay. Uses lr(state.step) and then
// advances state.step.
void optimizer_step(ParameterSet& params, const ParameterSet& grads,
                    AdamState& state, const AdamConfig& config,
                    const LearningRateSchedule& schedule);

}  // namespace mza
