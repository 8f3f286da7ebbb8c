#include "mza/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mza {

double LearningRateSchedule::at(std::int64_t step) const {
  if (decay_steps <= 0) return initial;
  return initial * std::pow(decay_rate, static_cast<double>(step) /
                                            static_cast<double>(decay_steps));
}

AdamState AdamState::for_params(const ParameterSet& params) {
  return AdamState{0, zeros_like(params), zeros_like(params)};
}

void optimizer_step(ParameterSet& params, const ParameterSet& grads,
                    AdamState& state, const AdamConfig& config,
                    const LearningRateSchedule& schedule) {
  if (state.first_moment.empty()) state = AdamState::for_params(params);
  const double lr = schedule.at(state.step);
  const double t = static_cast<double>(state.step + 1);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, w] : params) {
    const Tensor& g = grads.at(name);
    Tensor& m = state.first_moment.at(name);
    Tensor& v = state.second_moment.at(name);
    if (g.size() != w.size() || m.size() != w.size()) {
      throw std::invalid_argument("optimizer shape mismatch for '" + name +
                                  "'");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      w[i] -= lr * (m_hat / (std::sqrt(v_hat) + config.epsilon) +
                    config.weight_decay * w[i]);
    }
  }
  ++state.step;
}

}  // namespace mza
