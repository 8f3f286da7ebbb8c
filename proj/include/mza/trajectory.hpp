#pragma once

#include <cstdint>
#include <vector>

#include "mza/env.hpp"
#include "mza/mcts.hpp"
#include "mza/network.hpp"
#include "mza/rng.hpp"

namespace mza {

// One self-play episode. Index t refers to the state in which action t was
// taken; rewards[t] is the reward for that action.
struct Trajectory {
  std::vector<EnvState> states;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<std::vector<double>> mcts_policies;
  std::vector<double> root_values;
  double episode_return = 0.0;
  std::uint64_t seed = 0;

  std::size_t length() const { return actions.size(); }
  // Throws std::logic_error if per-step arrays disagree in length or a
  // policy row does not sum to one.
  void check() const;
};

// Per unroll step k = 0..K targets for a position t. Entry k uses position
// t + k; past the end of the episode the reward and value targets are zero
// and the policy target is uniform. `actions` holds the K actions to unroll
// (uniform random past the end).
struct TrainTarget {
  std::vector<double> reward_targets;
  std::vector<double> value_targets;
  std::vector<std::vector<double>> policy_targets;
  std::vector<Action> actions;
};

// value_k = sum_{i<n} gamma^i r_{t+k+i} + gamma^n root_value_{t+k+n}, with
// rewards past the episode end and the bootstrap beyond it taken as zero.
double value_target(const Trajectory& trajectory, std::size_t index,
                    int td_steps, double discount);

TrainTarget compute_targets(const Trajectory& trajectory, std::size_t t,
                            int num_unroll_steps, int td_steps,
                            double discount, int action_count, Rng& rng);

// Plays one episode acting with MCTS over the learned model. `config`
// supplies the search settings; its temperature sets the visit-count sampling.
// The environment reset and all search randomness derive from `seed`.
Trajectory self_play_episode(const Network& network, const Environment& env,
                             const SearchConfig& config, std::uint64_t seed);

// Return of one episode sampling actions directly from the policy prior.
double policy_prior_episode(const Network& network, const Environment& env,
                            std::uint64_t seed, bool greedy = false);

}  // namespace mza
