#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "mza/checkpoint.hpp"
#include "mza/config.hpp"
#include "mza/env.hpp"
#include "mza/loss.hpp"
#include "mza/mcts.hpp"
#include "mza/network.hpp"
#include "mza/optimizer.hpp"
#include "mza/replay.hpp"

namespace mza {

struct LearningCurvePoint {
  std::int64_t step = 0;
  std::int64_t seed = 0;
  double policy_prior_return_mean = 0.0;
  double behavior_return_mean = 0.0;
};

// Builders translating a RunConfig into component settings.
std::unique_ptr<Environment> make_environment(const RunConfig& config);
NetworkShape network_shape(const RunConfig& config, const Environment& env);
// Behavior-policy search: learned model, learned prior, value-net leaves.
SearchConfig acting_search_config(const RunConfig& config, double temperature,
                                  bool root_noise);
LossConfig loss_config(const RunConfig& config);
AdamConfig adam_config(const RunConfig& config);
LearningRateSchedule learning_rate_schedule(const RunConfig& config);

Network network_from_checkpoint(const Checkpoint& checkpoint);

// Self-play plus optimization for one seed. Training steps count optimizer
// updates. Sequential unless num_actors > 1, in which case the episodes of
// a loop are played on parallel snapshots and appended in episode order, so
// results do not depend on the actor count.
class Trainer {
 public:
  using CheckpointFn =
      std::function<void(const Checkpoint&, const LearningCurvePoint&)>;

  Trainer(const RunConfig& config, std::uint64_t seed);

  // Trains to total_training_steps, calling on_checkpoint at every step of
  // the checkpoint grid (step 0 is the initialization).
  void run(const CheckpointFn& on_checkpoint);

  void play_episodes(std::int64_t count);
  LossBreakdown train_step();
  LearningCurvePoint evaluate() const;
  Checkpoint checkpoint() const;

  const Network& network() const { return network_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t step() const { return optimizer_.step; }
  const RunConfig& config() const { return config_; }
  double temperature() const;

 private:
  RunConfig config_;
  std::uint64_t seed_;
  std::unique_ptr<Environment> env_;
  Network network_;
  AdamState optimizer_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::uint64_t episodes_played_ = 0;
};

// Runs one seed, writing step_<n>.ckpt files into checkpoint_dir. Returns the
// learning curve.
std::vector<LearningCurvePoint> train_seed(
    const RunConfig& config, std::uint64_t seed,
    const std::filesystem::path& checkpoint_dir);

std::filesystem::path checkpoint_path(const std::filesystem::path& dir,
                                      std::int64_t step);

// <output_dir>/<run_id>, its checkpoints/seed_<s>/ and reports/.
std::filesystem::path run_directory(const RunConfig& config);
std::filesystem::path checkpoint_directory(const RunConfig& config,
                                           std::int64_t seed);
std::filesystem::path reports_directory(const RunConfig& config);

}  // namespace mza
