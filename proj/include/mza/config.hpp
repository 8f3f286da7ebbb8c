#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mza {

// Piecewise-constant visit-softmax temperature over training steps, written
// as "1.0,50000:0.5,75000:0.25" (initial value, then step:value breakpoints).
struct TemperatureSchedule {
  double initial = 1.0;
  std::vector<std::pair<std::int64_t, double>> breakpoints;

  double at(std::int64_t step) const;
  // Value after the last breakpoint.
  double final_value() const;

  static TemperatureSchedule parse(const std::string& text);
  std::string to_string() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Every knob of a run. Names of the training hyperparameters follow the
// snake_cased row labels of the CartPole hyperparameter table.
struct RunConfig {
  // Training hyperparameters.
  std::vector<std::int64_t> random_seeds;
  double discount_factor = 0.997;
  std::int64_t total_training_steps = 100000;
  std::string optimizer = "adam";
  double initial_learning_rate = 0.02;
  double learning_rate_decay_rate = 0.1;
  std::int64_t learning_rate_decay_steps = 50000;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  std::int64_t batch_size = 128;
  std::int64_t encoding_size = 8;
  std::int64_t fully_connected_layer_size = 16;
  double root_dirichlet_alpha = 0.25;
  double root_dirichlet_fraction = 0.25;
  double prioritized_experience_replay_alpha = 0.5;
  std::int64_t num_unroll_steps = 10;
  std::int64_t td_steps = 50;
  std::int64_t support_size = 10;
  double value_loss_weight = 1.0;
  std::int64_t replay_buffer_size = 500;
  TemperatureSchedule visit_softmax_temperature_fn;

  // Framework settings not in the table.
  std::string environment = "cartpole";
  std::int64_t max_episode_steps = 500;
  std::int64_t num_simulations = 50;
  double pb_c_init = 1.25;
  double pb_c_base = 19652;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double per_beta = 1.0;
  double dynamics_gradient_scale = 0.5;
  std::int64_t initial_episodes = 1;
  std::int64_t episodes_per_loop = 1;
  std::int64_t training_steps_per_loop = 20;
  std::vector<std::int64_t> checkpoint_steps;  // empty: 6 evenly spaced
  std::int64_t eval_episodes = 5;
  std::int64_t num_actors = 1;

  // Execution.
  std::string output_dir = "out";
  std::string run_id = "run";
  std::int64_t jobs = 1;

  // Audits.
  std::vector<std::int64_t> audit_checkpoint_steps;  // empty: checkpoints
  std::int64_t audit_state_episodes = 4;
  std::int64_t audit_states_per_checkpoint = 32;
  std::int64_t audit_mc_samples = 64;
  std::vector<std::int64_t> audit_horizons;
  std::int64_t rank_horizon = 8;
  std::int64_t rank_enumeration_cap = 4096;
  std::int64_t rank_states = 16;
  std::int64_t cross_horizon = 10;
  std::vector<std::int64_t> sweep_budgets;
  std::int64_t sweep_rollout_horizon = 16;
  std::int64_t sweep_episodes = 3;
  std::int64_t prior_budget = 50;
  std::int64_t prior_states = 32;
  std::string prior_error_mode = "trajectory_sum";
  std::int64_t audit_step = -1;  // checkpoint for rank and sweep; -1: last

  RunConfig();

  // Resolved grids.
  std::vector<std::int64_t> resolved_checkpoint_steps() const;
  std::vector<std::int64_t> resolved_audit_steps() const;
  std::int64_t resolved_audit_step() const;

  // Set one key from its text form. Throws ConfigError naming the key for
  // unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();
  static std::string describe(const std::string& key);

  // Canonical resolved key/value map (every key present).
  std::map<std::string, std::string> to_map() const;
  // "key = value" lines in key order; parseable by load_config_text.
  std::string to_text() const;
  // FNV-1a over the canonical text of result-affecting keys, as 16 hex chars.
  std::uint64_t digest() const;
  std::string digest_hex() const;

  // Cross-field checks; throws ConfigError.
  void validate() const;
};

// "key = value" lines with '#' comments, or a JSON object (optionally under a
// top-level "config" member, as written into report summaries).
RunConfig load_config_text(const std::string& text);
RunConfig load_config_file(const std::filesystem::path& path);

std::vector<std::int64_t> parse_int_list(const std::string& text);
std::string format_int_list(const std::vector<std::int64_t>& values);
// Shortest round-trip decimal form; locale independent.
std::string format_double(double v);

}  // namespace mza
