#include "mza/env.hpp"

#include <cmath>
#include <stdexcept>

#include "mza/rng.hpp"

namespace mza {

StepResult Environment::step(const EnvState& state, Action action) const {
  if (state.terminal) {
    throw std::invalid_argument("step called on a terminal state");
  }
  if (action.index < 0 || action.index >= spec().action_count) {
    throw std::invalid_argument("action index out of range");
  }
  return transition(state, action);
}

CartPole::CartPole(double discount, int max_episode_steps)
    : CartPole(Physics{}, discount, max_episode_steps) {}

CartPole::CartPole(Physics physics, double discount, int max_episode_steps)
    : physics_(physics),
      spec_{.action_count = 2,
            .observation_dim = 4,
            .discount = discount,
            .max_episode_steps = max_episode_steps} {
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw std::invalid_argument("discount must lie in [0, 1)");
  }
}

EnvState CartPole::reset(std::uint64_t seed) const {
  Rng rng = make_rng(seed, 0xCA27);
  EnvState s;
  s.observation.resize(4);
  for (auto& v : s.observation) {
    v = uniform(rng, -physics_.init_range, physics_.init_range);
  }
  return s;
}

StepResult CartPole::transition(const EnvState& state, Action action) const {
  const auto& p = physics_;
  double x = state.observation[0];
  double x_dot = state.observation[1];
  double theta = state.observation[2];
  double theta_dot = state.observation[3];

  const double force = action.index == 1 ? p.force : -p.force;
  const double total_mass = p.cart_mass + p.pole_mass;
  const double pole_mass_length = p.pole_mass * p.half_length;
  const double cos_theta = std::cos(theta);
  const double sin_theta = std::sin(theta);

  const double temp =
      (force + pole_mass_length * theta_dot * theta_dot * sin_theta) /
      total_mass;
  const double theta_acc =
      (p.gravity * sin_theta - cos_theta * temp) /
      (p.half_length *
       (4.0 / 3.0 - p.pole_mass * cos_theta * cos_theta / total_mass));
  const double x_acc =
      temp - pole_mass_length * theta_acc * cos_theta / total_mass;

  x += p.tau * x_dot;
  x_dot += p.tau * x_acc;
  theta += p.tau * theta_dot;
  theta_dot += p.tau * theta_acc;

  StepResult r;
  r.next_state.observation = {x, x_dot, theta, theta_dot};
  r.next_state.step_index = state.step_index + 1;
  const bool failed = x < -p.x_threshold || x > p.x_threshold ||
                      theta < -p.theta_threshold || theta > p.theta_threshold;
  r.terminal = failed || r.next_state.step_index >= spec_.max_episode_steps;
  r.next_state.terminal = r.terminal;
  r.reward = 1.0;
  return r;
}

ChainMdp::ChainMdp(double discount, int max_episode_steps)
    : ChainMdp(Layout{}, discount, max_episode_steps) {}

ChainMdp::ChainMdp(Layout layout, double discount, int max_episode_steps)
    : layout_(layout),
      spec_{.action_count = 2,
            .observation_dim = layout.length,
            .discount = discount,
            .max_episode_steps = max_episode_steps} {
  if (layout.length < 1) throw std::invalid_argument("chain length < 1");
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw std::invalid_argument("discount must lie in [0, 1)");
  }
}

EnvState ChainMdp::reset(std::uint64_t) const {
  EnvState s;
  s.observation.assign(layout_.length, 0.0);
  s.observation[0] = 1.0;
  return s;
}

int ChainMdp::position(const EnvState& state) const {
  for (int i = 0; i < layout_.length; ++i) {
    if (state.observation[i] > 0.5) return i;
  }
  return 0;
}

StepResult ChainMdp::transition(const EnvState& state, Action action) const {
  const int pos = position(state);
  StepResult r;
  r.next_state = state;
  r.next_state.step_index = state.step_index + 1;
  bool done = false;
  if (action.index == 1) {
    r.reward = layout_.exit_reward;
    done = true;
  } else if (pos == layout_.length - 1) {
    r.reward = layout_.goal_reward;
    done = true;
  } else {
    r.next_state.observation[pos] = 0.0;
    r.next_state.observation[pos + 1] = 1.0;
  }
  r.terminal = done || r.next_state.step_index >= spec_.max_episode_steps;
  r.next_state.terminal = r.terminal;
  return r;
}

std::unique_ptr<Environment> make_environment(const std::string& name,
                                              double discount,
                                              int max_episode_steps) {
  if (name == "cartpole") {
    return std::make_unique<CartPole>(discount, max_episode_steps);
  }
  if (name == "chain") {
    return std::make_unique<ChainMdp>(discount, max_episode_steps);
  }
  throw std::invalid_argument("unknown environment '" + name + "'");
}

double rollout_value(const Environment& env, const EnvState& state,
                     std::span<const Action> actions, double discount) {
  double value = 0.0;
  double scale = 1.0;
  EnvState s = state;
  for (const Action a : actions) {
    if (s.terminal) break;
    StepResult r = env.step(s, a);
    value += scale * r.reward;
    scale *= discount;
    s = std::move(r.next_state);
  }
  return value;
}

}  // namespace mza
