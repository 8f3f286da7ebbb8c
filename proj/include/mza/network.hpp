#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mza/autodiff.hpp"
#include "mza/env.hpp"
#include "mza/support.hpp"
#include "mza/tensor.hpp"

namespace mza {

struct NetworkShape {
  int observation_dim = 4;
  int action_count = 2;
  int encoding_size = 8;
  int hidden_size = 16;
  int support_size = 10;

  SupportSpec support() const { return SupportSpec{support_size}; }
  int atom_count() const { return 2 * support_size + 1; }

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Latent vector; every component lies in [0, 1] after normalization.
using LatentState = std::vector<double>;

struct DynamicsOutput {
  LatentState latent;
  std::vector<double> reward_logits;
};

struct PredictionOutput {
  std::vector<double> policy_logits;
  std::vector<double> value_logits;
};

struct NetworkOutput {
  std::vector<double> policy_logits;
  std::vector<double> value_logits;
  std::vector<double> reward_logits;
  LatentState latent;
};

// The three MuZero functions as one-hidden-layer ELU perceptrons:
//
//   representation   obs            -> hidden -> latent (min-max scaled)
//   dynamics         [latent, 1hot] -> hidden -> latent (min-max scaled)
//   reward           [latent, 1hot] -> hidden -> reward logits
//   policy           latent         -> hidden -> policy logits
//   value            latent         -> hidden -> value logits
//
// Weights are (in x out) so a batch of rows multiplies on the left.
class Network {
 public:
  Network(NetworkShape shape, ParameterSet params);

  // Uniform fan-in initialization, U(-1/sqrt(in), 1/sqrt(in)).
  static Network initialize(const NetworkShape& shape, std::uint64_t seed);
  // Rebuilds the shape from parameter tensor dimensions.
  static NetworkShape infer_shape(const ParameterSet& params);
  static std::vector<std::string> parameter_names();

  const NetworkShape& shape() const { return shape_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& mutable_params() { return params_; }

  LatentState represent(std::span<const double> observation) const;
  DynamicsOutput dynamics(const LatentState& latent, Action action) const;
  PredictionOutput predict(const LatentState& latent) const;

  // represent + predict
  NetworkOutput initial_inference(std::span<const double> observation) const;
  // dynamics + predict
  NetworkOutput recurrent_inference(const LatentState& latent,
                                    Action action) const;

  std::vector<double> policy(const LatentState& latent) const;
  double value(const LatentState& latent) const;

  // Batched recording versions for training. Inputs are (batch x width).
  ad::Var represent(ad::Tape& tape, ad::Var observations) const;
  // Returns {next latent, reward logits}.
  std::pair<ad::Var, ad::Var> dynamics(ad::Tape& tape, ad::Var latents,
                                       const Tensor& one_hot_actions) const;
  // Returns {policy logits, value logits}.
  std::pair<ad::Var, ad::Var> predict(ad::Tape& tape, ad::Var latents) const;

 private:
  std::vector<double> mlp(const std::string& prefix,
                          std::span<const double> input) const;
  ad::Var mlp(ad::Tape& tape, const std::string& prefix, ad::Var input) const;
  void check_action(Action action) const;

  NetworkShape shape_;
  ParameterSet params_;
};

}  // namespace mza
