#include "mza/trajectory.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mza {

void Trajectory::check() const {
  const auto n = actions.size();
  if (states.size() != n || rewards.size() != n ||
      mcts_policies.size() != n || root_values.size() != n) {
    throw std::logic_error("trajectory arrays disagree in length");
  }
  for (const auto& row : mcts_policies) {
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::logic_error("mcts policy row does not sum to one");
    }
  }
}

double value_target(const Trajectory& traj, std::size_t index, int td_steps,
                    double discount) {
  const std::size_t len = traj.length();
  if (index >= len) return 0.0;
  double value = 0.0;
  double scale = 1.0;
  for (int i = 0; i < td_steps; ++i) {
    const std::size_t j = index + i;
    if (j >= len) break;
    value += scale * traj.rewards[j];
    scale *= discount;
  }
  const std::size_t bootstrap = index + td_steps;
  if (bootstrap < len) {
    value += std::pow(discount, td_steps) * traj.root_values[bootstrap];
  }
  return value;
}

TrainTarget compute_targets(const Trajectory& traj, std::size_t t,
                            int num_unroll_steps, int td_steps,
                            double discount, int action_count, Rng& rng) {
  if (t >= traj.length()) {
    throw std::out_of_range("target position outside trajectory");
  }
  TrainTarget target;
  const std::vector<double> uniform(action_count, 1.0 / action_count);
  for (int k = 0; k <= num_unroll_steps; ++k) {
    const std::size_t i = t + k;
    if (i < traj.length()) {
      target.reward_targets.push_back(traj.rewards[i]);
      target.value_targets.push_back(value_target(traj, i, td_steps, discount));
      target.policy_targets.push_back(traj.mcts_policies[i]);
    } else {
      target.reward_targets.push_back(0.0);
      target.value_targets.push_back(0.0);
      target.policy_targets.push_back(uniform);
    }
    if (k < num_unroll_steps) {
      target.actions.push_back(i < traj.length()
                                   ? traj.actions[i]
                                   : Action{uniform_int(rng, action_count)});
    }
  }
  return target;
}

Trajectory self_play_episode(const Network& network, const Environment& env,
                             const SearchConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x5E1F);
  LearnedModel model(network);
  Trajectory traj;
  traj.seed = seed;
  EnvState state = env.reset(seed);
  while (!state.terminal) {
    auto result = run_search(model, state, config, rng);
    const Action a =
        choose_action(result.action_distribution, config.temperature, rng);
    auto step = env.step(state, a);
    traj.states.push_back(state);
    traj.actions.push_back(a);
    traj.rewards.push_back(step.reward);
    traj.mcts_policies.push_back(std::move(result.action_distribution));
    traj.root_values.push_back(result.root_value);
    traj.episode_return += step.reward;
    state = std::move(step.next_state);
  }
  return traj;
}

double policy_prior_episode(const Network& network, const Environment& env,
                            std::uint64_t seed, bool greedy) {
  Rng rng = make_rng(seed, 0x9A10);
  EnvState state = env.reset(seed);
  double total = 0.0;
  while (!state.terminal) {
    const auto probs = network.policy(network.represent(state.observation));
    const Action a = choose_action(probs, greedy ? 0.0 : 1.0, rng);
    auto step = env.step(state, a);
    total += step.reward;
    state = std::move(step.next_state);
  }
  return total;
}

}  // namespace mza
