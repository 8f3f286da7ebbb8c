#pragma once

#include <variant>
#include <vector>

#include "mza/env.hpp"
#include "mza/network.hpp"

namespace mza {

// State of a planning model: a learned latent or a real environment state.
using ModelState = std::variant<LatentState, EnvState>;

struct ModelStep {
  ModelState next;
  double reward = 0.0;
  bool terminal = false;
};

struct Evaluation {
  std::vector<double> policy;
  double value = 0.0;
};

// What tree search and the audits need from a world model: encode a real
// state, advance it under an action with a scalar reward, and optionally
// score it with a policy prior and value.
class SearchModel {
 public:
  virtual ~SearchModel() = default;

  virtual int action_count() const = 0;
  virtual ModelState encode(const EnvState& state) const = 0;
  virtual ModelStep advance(const ModelState& state, Action action) const = 0;
  virtual Evaluation evaluate(const ModelState& state) const = 0;
};

// MuZero's learned model: h for encode, g for advance (reward decoded from
// its support), f for evaluate. Never reports termination.
class LearnedModel final : public SearchModel {
 public:
  explicit LearnedModel(const Network& network) : network_(&network) {}

  int action_count() const override { return network_->shape().action_count; }
  ModelState encode(const EnvState& state) const override;
  ModelStep advance(const ModelState& state, Action action) const override;
  Evaluation evaluate(const ModelState& state) const override;

  const Network& network() const { return *network_; }

 private:
  const Network* network_;
};

// The real simulator used as a planning model. Terminal states absorb with
// zero reward. With a network attached, evaluate() scores real states
// through h and f; otherwise it returns a uniform policy and zero value.
class EnvironmentModel final : public SearchModel {
 public:
  explicit EnvironmentModel(const Environment& env,
                            const Network* network = nullptr)
      : env_(&env), network_(network) {}

  int action_count() const override { return env_->spec().action_count; }
  ModelState encode(const EnvState& state) const override { return state; }
  ModelStep advance(const ModelState& state, Action action) const override;
  Evaluation evaluate(const ModelState& state) const override;

  const Environment& environment() const { return *env_; }

 private:
  const Environment* env_;
  const Network* network_;
};

}  // namespace mza
