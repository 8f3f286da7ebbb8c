#include "mza/model.hpp"

#include <stdexcept>

namespace mza {

namespace {
const LatentState& latent_of(const ModelState& s) {
  if (const auto* z = std::get_if<LatentState>(&s)) return *z;
  throw std::invalid_argument("learned model given an environment state");
}

const EnvState& env_state_of(const ModelState& s) {
  if (const auto* e = std::get_if<EnvState>(&s)) return *e;
  throw std::invalid_argument("environment model given a latent state");
}
}  // namespace

ModelState LearnedModel::encode(const EnvState& state) const {
  return network_->represent(state.observation);
}

ModelStep LearnedModel::advance(const ModelState& state, Action action) const {
  auto out = network_->dynamics(latent_of(state), action);
  const double reward =
      logits_to_scalar(out.reward_logits, network_->shape().support());
  return {std::move(out.latent), reward, false};
}

Evaluation LearnedModel::evaluate(const ModelState& state) const {
  const auto pred = network_->predict(latent_of(state));
  return {softmax(pred.policy_logits),
          logits_to_scalar(pred.value_logits, network_->shape().support())};
}

ModelStep EnvironmentModel::advance(const ModelState& state,
                                    Action action) const {
  const EnvState& s = env_state_of(state);
  if (s.terminal) return {s, 0.0, true};
  auto r = env_->step(s, action);
  return {std::move(r.next_state), r.reward, r.terminal};
}

Evaluation EnvironmentModel::evaluate(const ModelState& state) const {
  const EnvState& s = env_state_of(state);
  const int n = action_count();
  if (network_ == nullptr || s.terminal) {
    return {std::vector<double>(n, 1.0 / n), 0.0};
  }
  const auto z = network_->represent(s.observation);
  const auto pred = network_->predict(z);
  return {softmax(pred.policy_logits),
          logits_to_scalar(pred.value_logits, network_->shape().support())};
}

}  // namespace mza
