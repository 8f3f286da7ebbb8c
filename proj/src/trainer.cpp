#include "mza/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mza/parallel.hpp"
#include "mza/rng.hpp"
#include "mza/trajectory.hpp"

namespace mza {
namespace {

// Priorities of exactly zero would never be sampled again.
constexpr double kMinPriority = 1e-6;

double priority_of(double error) {
  return std::max(std::abs(error), kMinPriority);
}

}  // namespace

std::unique_ptr<Environment> make_environment(const RunConfig& config) {
  return make_environment(config.environment, config.discount_factor,
                          static_cast<int>(config.max_episode_steps));
}

NetworkShape network_shape(const RunConfig& config, const Environment& env) {
  NetworkShape shape;
  shape.observation_dim = env.spec().observation_dim;
  shape.action_count = env.spec().action_count;
  shape.encoding_size = static_cast<int>(config.encoding_size);
  shape.hidden_size = static_cast<int>(config.fully_connected_layer_size);
  shape.support_size = static_cast<int>(config.support_size);
  return shape;
}

SearchConfig acting_search_config(const RunConfig& config, double temperature,
                                  bool root_noise) {
  SearchConfig s;
  s.num_simulations = static_cast<int>(config.num_simulations);
  s.pb_c_init = config.pb_c_init;
  s.pb_c_base = config.pb_c_base;
  s.discount = config.discount_factor;
  s.temperature = temperature;
  s.dirichlet_alpha = config.root_dirichlet_alpha;
  s.dirichlet_fraction = config.root_dirichlet_fraction;
  s.add_root_noise = root_noise;
  s.rollout_horizon = static_cast<int>(config.sweep_rollout_horizon);
  return s;
}

LossConfig loss_config(const RunConfig& config) {
  return {config.value_loss_weight, config.dynamics_gradient_scale};
}

AdamConfig adam_config(const RunConfig& config) {
  return {config.momentum, config.adam_beta2, config.adam_epsilon,
          config.weight_decay};
}

LearningRateSchedule learning_rate_schedule(const RunConfig& config) {
  return {config.initial_learning_rate, config.learning_rate_decay_rate,
          config.learning_rate_decay_steps};
}

Network network_from_checkpoint(const Checkpoint& checkpoint) {
  return Network(Network::infer_shape(checkpoint.params), checkpoint.params);
}

Trainer::Trainer(const RunConfig& config, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      env_(make_environment(config)),
      network_(Network::initialize(network_shape(config, *env_),
                                   mix_seed(seed, 0x4E7))),
      optimizer_(AdamState::for_params(network_.params())),
      buffer_(static_cast<std::size_t>(config.replay_buffer_size),
              config.prioritized_experience_replay_alpha, config.per_beta),
      rng_(make_rng(seed, 0x7A1A)) {
  config_.validate();
}

double Trainer::temperature() const {
  return config_.visit_softmax_temperature_fn.at(step());
}

void Trainer::play_episodes(std::int64_t count) {
  if (count <= 0) return;
  const SearchConfig search = acting_search_config(config_, temperature(), true);
  const std::uint64_t stream = mix_seed(seed_, 0x5E1F);
  std::vector<Trajectory> episodes(static_cast<std::size_t>(count));
  parallel_for(episodes.size(), static_cast<std::size_t>(config_.num_actors),
               [&](std::size_t i) {
                 episodes[i] = self_play_episode(
                     network_, *env_, search,
                     mix_seed(stream, episodes_played_ + i));
               });
  episodes_played_ += episodes.size();
  for (auto& traj : episodes) {
    std::vector<double> priorities(traj.length());
    for (std::size_t t = 0; t < traj.length(); ++t) {
      priorities[t] = priority_of(
          traj.root_values[t] -
          value_target(traj, t, static_cast<int>(config_.td_steps),
                       config_.discount_factor));
    }
    buffer_.add(std::move(traj), std::move(priorities));
  }
}

LossBreakdown Trainer::train_step() {
  const auto samples =
      buffer_.sample(static_cast<std::size_t>(config_.batch_size), rng_);
  const int action_count = env_->spec().action_count;
  std::vector<TrainingExample> batch;
  batch.reserve(samples.size());
  for (const auto& s : samples) {
    const Trajectory& traj = buffer_.trajectory(s.slot);
    TrainingExample ex;
    ex.observation = traj.states[s.position].observation;
    ex.target = compute_targets(
        traj, s.position, static_cast<int>(config_.num_unroll_steps),
        static_cast<int>(config_.td_steps), config_.discount_factor,
        action_count, rng_);
    ex.weight = s.weight;
    batch.push_back(std::move(ex));
  }
  LossResult result = unrolled_loss(network_, batch, loss_config(config_));
  for (const auto& [name, g] : result.gradients) {
    if (!g.all_finite()) {
      throw NumericalError("non-finite gradient for " + name);
    }
  }
  optimizer_step(network_.mutable_params(), result.gradients, optimizer_,
                 adam_config(config_), learning_rate_schedule(config_));
  std::vector<double> errors(samples.size());
  for (std::size_t b = 0; b < samples.size(); ++b) {
    errors[b] = priority_of(result.breakdown.initial_values[b] -
                            batch[b].target.value_targets[0]);
  }
  buffer_.update_priorities(samples, errors);
  return result.breakdown;
}

LearningCurvePoint Trainer::evaluate() const {
  const std::size_t n = static_cast<std::size_t>(config_.eval_episodes);
  const SearchConfig search =
      acting_search_config(config_, temperature(), false);
  const std::uint64_t stream = mix_seed(seed_, 0xE7A1);
  std::vector<double> prior(n), behavior(n);
  parallel_for(n, static_cast<std::size_t>(config_.num_actors),
               [&](std::size_t e) {
                 const std::uint64_t s = mix_seed(stream, e);
                 prior[e] = policy_prior_episode(network_, *env_, s, false);
                 behavior[e] =
                     self_play_episode(network_, *env_, search, s).episode_return;
               });
  LearningCurvePoint point;
  point.step = step();
  point.seed = static_cast<std::int64_t>(seed_);
  for (std::size_t e = 0; e < n; ++e) {
    point.policy_prior_return_mean += prior[e] / static_cast<double>(n);
    point.behavior_return_mean += behavior[e] / static_cast<double>(n);
  }
  return point;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config_digest = config_.digest();
  c.training_step = step();
  c.params = network_.params();
  c.optimizer = optimizer_;
  return c;
}

void Trainer::run(const CheckpointFn& on_checkpoint) {
  std::vector<std::int64_t> grid = config_.resolved_checkpoint_steps();
  std::sort(grid.begin(), grid.end());
  std::size_t next = 0;
  auto emit_due = [&] {
    while (next < grid.size() && grid[next] <= step()) {
      if (grid[next] == step()) on_checkpoint(checkpoint(), evaluate());
      ++next;
    }
  };

  play_episodes(std::max<std::int64_t>(1, config_.initial_episodes));
  emit_due();
  while (step() < config_.total_training_steps) {
    for (std::int64_t i = 0; i < config_.training_steps_per_loop &&
                             step() < config_.total_training_steps;
         ++i) {
      train_step();
      emit_due();
    }
    if (step() < config_.total_training_steps) {
      play_episodes(config_.episodes_per_loop);
    }
  }
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir,
                                      std::int64_t step) {
  return dir / ("step_" + std::to_string(step) + ".ckpt");
}

std::filesystem::path run_directory(const RunConfig& config) {
  return std::filesystem::path(config.output_dir) / config.run_id;
}

std::filesystem::path checkpoint_directory(const RunConfig& config,
                                           std::int64_t seed) {
  return run_directory(config) / "checkpoints" /
         ("seed_" + std::to_string(seed));
}

std::filesystem::path reports_directory(const RunConfig& config) {
  return run_directory(config) / "reports";
}

std::vector<LearningCurvePoint> train_seed(
    const RunConfig& config, std::uint64_t seed,
    const std::filesystem::path& checkpoint_dir) {
  std::filesystem::create_directories(checkpoint_dir);
  std::vector<LearningCurvePoint> curve;
  Trainer trainer(config, seed);
  trainer.run([&](const Checkpoint& c, const LearningCurvePoint& point) {
    save_checkpoint(checkpoint_path(checkpoint_dir, c.training_step), c);
    curve.push_back(point);
  });
  return curve;
}

}  // namespace mza
