#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mza {

struct EnvState {
  std::vector<double> observation;
  int step_index = 0;
  bool terminal = false;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct Action {
  int index = 0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct StepResult {
  EnvState next_state;
  double reward = 0.0;
  bool terminal = false;
};

struct EnvSpec {
  int action_count = 2;
  int observation_dim = 1;
  double discount = 0.997;
  int max_episode_steps = 500;
};

// A deterministic MDP. Implementations are immutable after construction, so
// one instance can serve any number of threads and searches.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const EnvSpec& spec() const = 0;

  // Initial state drawn from the start distribution; a pure function of seed.
  virtual EnvState reset(std::uint64_t seed) const = 0;

  // Throws std::invalid_argument for terminal states or invalid actions.
  StepResult step(const EnvState& state, Action action) const;

 protected:
  virtual StepResult transition(const EnvState& state, Action action) const = 0;
};

// Classic cart-pole balancing task with Euler integration.
class CartPole final : public Environment {
 public:
  struct Physics {
    double gravity = 9.8;
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double half_length = 0.5;
    double force = 10.0;
    double tau = 0.02;
    double x_threshold = 2.4;
    double theta_threshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
    double init_range = 0.05;
  };

  explicit CartPole(double discount = 0.997, int max_episode_steps = 500);
  CartPole(Physics physics, double discount, int max_episode_steps);

  std::string name() const override { return "cartpole"; }
  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(std::uint64_t seed) const override;

  const Physics& physics() const { return physics_; }

 protected:
  StepResult transition(const EnvState& state, Action action) const override;

 private:
  Physics physics_;
  EnvSpec spec_;
};

// Small deterministic chain used as a hand-checkable fixture.
//
// Positions 0..length-1, observation is the one-hot position. Action 0
// advances; at the last position advancing pays goal_reward and ends the
// episode. Action 1 exits immediately with exit_reward. The optimal first
// action is to advance whenever discount^(length-1) * goal_reward exceeds
// exit_reward.
class ChainMdp final : public Environment {
 public:
  struct Layout {
    int length = 3;
    double goal_reward = 1.0;
    double exit_reward = 0.2;
  };

  explicit ChainMdp(double discount = 0.9, int max_episode_steps = 10);
  ChainMdp(Layout layout, double discount, int max_episode_steps);

  std::string name() const override { return "chain"; }
  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(std::uint64_t seed) const override;

  const Layout& layout() const { return layout_; }
  int position(const EnvState& state) const;

 protected:
  StepResult transition(const EnvState& state, Action action) const override;

 private:
  Layout layout_;
  EnvSpec spec_;
};

// Looks up an environment by its config name ("cartpole", "chain").
std::unique_ptr<Environment> make_environment(const std::string& name,
                                              double discount,
                                              int max_episode_steps);

// Discounted return of following `actions` from `state` in the real
// dynamics. Rewards after a terminal state count as zero.
double rollout_value(const Environment& env, const EnvState& state,
                     std::span<const Action> actions, double discount);

}  // namespace mza
