#include "mza/network.hpp"

#include <cmath>
#include <stdexcept>

#include "mza/kernels.hpp"
#include "mza/rng.hpp"

namespace mza {

namespace {

constexpr const char* kHeads[] = {"dynamics_reward", "dynamics_state",
                                  "prediction_policy", "prediction_value",
                                  "representation"};

void add_layer(ParameterSet& params, const std::string& name, int in, int out,
               Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w({in, out});
  for (auto& v : w.values()) v = uniform(rng, -bound, bound);
  Tensor b({out});
  for (auto& v : b.values()) v = uniform(rng, -bound, bound);
  params.emplace(name + ".weight", std::move(w));
  params.emplace(name + ".bias", std::move(b));
}

void add_mlp(ParameterSet& params, const std::string& prefix, int in,
             int hidden, int out, Rng& rng) {
  add_layer(params, prefix + ".hidden", in, hidden, rng);
  add_layer(params, prefix + ".out", hidden, out, rng);
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument(std::string("non-finite ") + what);
    }
  }
}

}  // namespace

Network::Network(NetworkShape shape, ParameterSet params)
    : shape_(shape), params_(std::move(params)) {
  if (infer_shape(params_) != shape_) {
    throw std::invalid_argument("parameters do not match network shape");
  }
}

Network Network::initialize(const NetworkShape& s, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x1417);
  ParameterSet p;
  const int with_action = s.encoding_size + s.action_count;
  // Fixed creation order keeps initial weights stable under renaming.
  add_mlp(p, "representation", s.observation_dim, s.hidden_size,
          s.encoding_size, rng);
  add_mlp(p, "dynamics_state", with_action, s.hidden_size, s.encoding_size,
          rng);
  add_mlp(p, "dynamics_reward", with_action, s.hidden_size, s.atom_count(),
          rng);
  add_mlp(p, "prediction_policy", s.encoding_size, s.hidden_size,
          s.action_count, rng);
  add_mlp(p, "prediction_value", s.encoding_size, s.hidden_size,
          s.atom_count(), rng);
  return Network(s, std::move(p));
}

std::vector<std::string> Network::parameter_names() {
  std::vector<std::string> names;
  for (const char* head : kHeads) {
    for (const char* layer : {".hidden", ".out"}) {
      for (const char* kind : {".bias", ".weight"}) {
        names.push_back(std::string(head) + layer + kind);
      }
    }
  }
  return names;
}

NetworkShape Network::infer_shape(const ParameterSet& params) {
  auto dims = [&](const std::string& name) -> const std::vector<std::int64_t>& {
    auto it = params.find(name);
    if (it == params.end()) {
      throw std::invalid_argument("missing parameter '" + name + "'");
    }
    return it->second.shape();
  };
  for (const auto& name : parameter_names()) dims(name);
  if (params.size() != parameter_names().size()) {
    throw std::invalid_argument("unexpected extra parameters");
  }
  NetworkShape s;
  const auto& rep_hidden = dims("representation.hidden.weight");
  s.observation_dim = static_cast<int>(rep_hidden.at(0));
  s.hidden_size = static_cast<int>(rep_hidden.at(1));
  s.encoding_size = static_cast<int>(dims("representation.out.weight").at(1));
  s.action_count =
      static_cast<int>(dims("prediction_policy.out.weight").at(1));
  const auto atoms = dims("prediction_value.out.weight").at(1);
  s.support_size = static_cast<int>((atoms - 1) / 2);

  // Every layer must agree with the inferred sizes.
  const int with_action = s.encoding_size + s.action_count;
  auto expect = [&](const std::string& layer, std::int64_t in,
                    std::int64_t out) {
    const std::vector<std::int64_t> w{in, out};
    const std::vector<std::int64_t> b{out};
    if (dims(layer + ".weight") != w || dims(layer + ".bias") != b) {
      throw std::invalid_argument("inconsistent shape for '" + layer + "'");
    }
  };
  expect("representation.hidden", s.observation_dim, s.hidden_size);
  expect("representation.out", s.hidden_size, s.encoding_size);
  expect("dynamics_state.hidden", with_action, s.hidden_size);
  expect("dynamics_state.out", s.hidden_size, s.encoding_size);
  expect("dynamics_reward.hidden", with_action, s.hidden_size);
  expect("dynamics_reward.out", s.hidden_size, s.atom_count());
  expect("prediction_policy.hidden", s.encoding_size, s.hidden_size);
  expect("prediction_policy.out", s.hidden_size, s.action_count);
  expect("prediction_value.hidden", s.encoding_size, s.hidden_size);
  expect("prediction_value.out", s.hidden_size, s.atom_count());
  return s;
}

std::vector<double> Network::mlp(const std::string& prefix,
                                 std::span<const double> input) const {
  const Tensor& w1 = params_.at(prefix + ".hidden.weight");
  const Tensor& b1 = params_.at(prefix + ".hidden.bias");
  const Tensor& w2 = params_.at(prefix + ".out.weight");
  const Tensor& b2 = params_.at(prefix + ".out.bias");
  std::vector<double> hidden(w1.cols());
  kernels::affine(input.data(), 1, w1.rows(), w1.data(), b1.data(), w1.cols(),
                  hidden.data());
  for (auto& v : hidden) v = kernels::elu(v);
  std::vector<double> out(w2.cols());
  kernels::affine(hidden.data(), 1, w2.rows(), w2.data(), b2.data(),
                  w2.cols(), out.data());
  return out;
}

void Network::check_action(Action action) const {
  if (action.index < 0 || action.index >= shape_.action_count) {
    throw std::invalid_argument("action index out of range");
  }
}

LatentState Network::represent(std::span<const double> observation) const {
  if (static_cast<int>(observation.size()) != shape_.observation_dim) {
    throw std::invalid_argument("observation has the wrong length");
  }
  require_finite(observation, "observation");
  auto raw = mlp("representation", observation);
  LatentState z(raw.size());
  kernels::minmax_row(raw.data(), static_cast<std::int64_t>(raw.size()),
                      z.data());
  return z;
}

DynamicsOutput Network::dynamics(const LatentState& latent,
                                 Action action) const {
  check_action(action);
  if (static_cast<int>(latent.size()) != shape_.encoding_size) {
    throw std::invalid_argument("latent has the wrong length");
  }
  std::vector<double> input(latent);
  input.resize(latent.size() + shape_.action_count, 0.0);
  input[latent.size() + action.index] = 1.0;
  DynamicsOutput out;
  auto raw = mlp("dynamics_state", input);
  out.latent.resize(raw.size());
  kernels::minmax_row(raw.data(), static_cast<std::int64_t>(raw.size()),
                      out.latent.data());
  out.reward_logits = mlp("dynamics_reward", input);
  return out;
}

PredictionOutput Network::predict(const LatentState& latent) const {
  if (static_cast<int>(latent.size()) != shape_.encoding_size) {
    throw std::invalid_argument("latent has the wrong length");
  }
  return {mlp("prediction_policy", latent), mlp("prediction_value", latent)};
}

NetworkOutput Network::initial_inference(
    std::span<const double> observation) const {
  NetworkOutput out;
  out.latent = represent(observation);
  auto pred = predict(out.latent);
  out.policy_logits = std::move(pred.policy_logits);
  out.value_logits = std::move(pred.value_logits);
  out.reward_logits = scalar_to_support(0.0, shape_.support());
  return out;
}

NetworkOutput Network::recurrent_inference(const LatentState& latent,
                                           Action action) const {
  auto dyn = dynamics(latent, action);
  auto pred = predict(dyn.latent);
  return {std::move(pred.policy_logits), std::move(pred.value_logits),
          std::move(dyn.reward_logits), std::move(dyn.latent)};
}

std::vector<double> Network::policy(const LatentState& latent) const {
  return softmax(mlp("prediction_policy", latent));
}

double Network::value(const LatentState& latent) const {
  return logits_to_scalar(mlp("prediction_value", latent), shape_.support());
}

ad::Var Network::mlp(ad::Tape& tape, const std::string& prefix,
                     ad::Var input) const {
  auto h = tape.linear(input, tape.param(prefix + ".hidden.weight"),
                       tape.param(prefix + ".hidden.bias"));
  h = tape.elu(h);
  return tape.linear(h, tape.param(prefix + ".out.weight"),
                     tape.param(prefix + ".out.bias"));
}

ad::Var Network::represent(ad::Tape& tape, ad::Var observations) const {
  return tape.minmax_normalize(mlp(tape, "representation", observations));
}

std::pair<ad::Var, ad::Var> Network::dynamics(
    ad::Tape& tape, ad::Var latents, const Tensor& one_hot_actions) const {
  auto input = tape.concat_cols(latents, tape.constant(one_hot_actions));
  auto next = tape.minmax_normalize(mlp(tape, "dynamics_state", input));
  return {next, mlp(tape, "dynamics_reward", input)};
}

std::pair<ad::Var, ad::Var> Network::predict(ad::Tape& tape,
                                             ad::Var latents) const {
  return {mlp(tape, "prediction_policy", latents),
          mlp(tape, "prediction_value", latents)};
}

}  // namespace mza
