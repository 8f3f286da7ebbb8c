#include "mza/loss.hpp"

#include <cmath>

#include "mza/autodiff.hpp"

namespace mza {

LossResult unrolled_loss(const Network& network,
                         std::span<const TrainingExample> batch,
                         const LossConfig& config, bool with_gradients) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const NetworkShape& shape = network.shape();
  const SupportSpec support = shape.support();
  const auto rows = static_cast<std::int64_t>(batch.size());
  const std::size_t unroll = batch[0].target.actions.size();
  for (const auto& ex : batch) {
    if (ex.target.actions.size() != unroll ||
        ex.target.value_targets.size() != unroll + 1) {
      throw std::invalid_argument("inconsistent unroll length in batch");
    }
  }

  std::vector<double> weights(rows);
  Tensor observations = Tensor::matrix(rows, shape.observation_dim);
  for (std::int64_t r = 0; r < rows; ++r) {
    weights[r] = batch[r].weight;
    for (int j = 0; j < shape.observation_dim; ++j) {
      observations.at(r, j) = batch[r].observation.at(j);
    }
  }

  auto support_targets = [&](auto&& scalar_at) {
    Tensor t = Tensor::matrix(rows, shape.atom_count());
    for (std::int64_t r = 0; r < rows; ++r) {
      const auto enc = scalar_to_support(scalar_at(r), support);
      std::copy(enc.begin(), enc.end(), t.data() + r * shape.atom_count());
    }
    return t;
  };

  ad::Tape tape(network.params());
  LossResult result;
  ad::Var latent = network.represent(tape, tape.constant(observations));
  ad::Var reward_sum = tape.constant(Tensor({1, 1}));
  ad::Var policy_sum = tape.constant(Tensor({1, 1}));
  ad::Var value_sum = tape.constant(Tensor({1, 1}));

  for (std::size_t k = 0; k <= unroll; ++k) {
    auto [policy_logits, value_logits] = network.predict(tape, latent);
    if (k == 0) {
      const Tensor& vl = tape.value(value_logits);
      for (std::int64_t r = 0; r < rows; ++r) {
        result.breakdown.initial_values.push_back(logits_to_scalar(
            std::span<const double>(vl.data() + r * vl.cols(), vl.cols()),
            support));
      }
    }

    Tensor policy_targets = Tensor::matrix(rows, shape.action_count);
    for (std::int64_t r = 0; r < rows; ++r) {
      const auto& p = batch[r].target.policy_targets.at(k);
      std::copy(p.begin(), p.end(), policy_targets.data() + r * shape.action_count);
    }
    policy_sum = tape.add(policy_sum, tape.softmax_cross_entropy(
                                          policy_logits, policy_targets, weights));
    value_sum = tape.add(
        value_sum,
        tape.softmax_cross_entropy(
            value_logits,
            support_targets([&](std::int64_t r) {
              return batch[r].target.value_targets[k];
            }),
            weights));

    if (k == unroll) break;
    Tensor one_hot = Tensor::matrix(rows, shape.action_count);
    for (std::int64_t r = 0; r < rows; ++r) {
      one_hot.at(r, batch[r].target.actions[k].index) = 1.0;
    }
    auto scaled = tape.scale_gradient(latent, config.dynamics_gradient_scale);
    auto [next_latent, reward_logits] = network.dynamics(tape, scaled, one_hot);
    reward_sum = tape.add(
        reward_sum,
        tape.softmax_cross_entropy(
            reward_logits,
            support_targets([&](std::int64_t r) {
              return batch[r].target.reward_targets[k];
            }),
            weights));
    latent = next_latent;
  }

  const double inv_rows = 1.0 / static_cast<double>(rows);
  ad::Var total = tape.add(tape.add(reward_sum, policy_sum),
                           tape.scale(value_sum, config.value_loss_weight));
  total = tape.scale(total, inv_rows);

  auto& b = result.breakdown;
  b.total = tape.scalar(total);
  b.reward = tape.scalar(reward_sum) * inv_rows;
  b.policy = tape.scalar(policy_sum) * inv_rows;
  b.value = tape.scalar(value_sum) * inv_rows;
  if (!std::isfinite(b.total)) {
    throw NumericalError("non-finite training loss");
  }
  if (with_gradients) result.gradients = tape.backward(total);
  return result;
}

}  // namespace mza
