#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mza/checkpoint.hpp"
#include "mza/config.hpp"
#include "mza/env.hpp"
#include "mza/mcts.hpp"
#include "mza/model.hpp"
#include "mza/network.hpp"
#include "mza/rng.hpp"
#include "mza/stats.hpp"

namespace mza {

class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::filesystem::path& path)
      : std::runtime_error("missing artifact: " + path.string()),
        path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Policies over real states.

class ActionPolicy {
 public:
  virtual ~ActionPolicy() = default;
  virtual int action_count() const = 0;
  virtual std::vector<double> distribution(const EnvState& state) const = 0;
};

class UniformPolicy final : public ActionPolicy {
 public:
  explicit UniformPolicy(int action_count) : action_count_(action_count) {}
  int action_count() const override { return action_count_; }
  std::vector<double> distribution(const EnvState& state) const override;

 private:
  int action_count_;
};

// The network's policy head applied to the real observation.
class PriorPolicy final : public ActionPolicy {
 public:
  explicit PriorPolicy(std::shared_ptr<const Network> network)
      : network_(std::move(network)) {}
  int action_count() const override;
  std::vector<double> distribution(const EnvState& state) const override;

 private:
  std::shared_ptr<const Network> network_;
};

// MCTS acting: search over the learned model from the real state and return
// the temperature-scaled visit distribution. The search must be
// deterministic (no root noise, value-network leaves), so distributions are
// memoized per (step index, observation).
class BehaviorPolicy final : public ActionPolicy {
 public:
  BehaviorPolicy(std::shared_ptr<const Network> network, SearchConfig config);
  int action_count() const override;
  std::vector<double> distribution(const EnvState& state) const override;
  const SearchConfig& config() const { return config_; }

 private:
  using Key = std::pair<std::int64_t, std::vector<double>>;
  std::shared_ptr<const Network> network_;
  LearnedModel model_;
  SearchConfig config_;
  mutable std::mutex mutex_;
  mutable std::map<Key, std::vector<double>> memo_;
};

// ---------------------------------------------------------------------------
// Sequence-level measurements. Past a real terminal state the padding policy
// is uniform and rewards are zero; models keep unrolling.

// sum_k gamma^k u_k from encoding `state` and unrolling the model along
// `actions`. Empty sequences are worth 0.
double model_sequence_value(const SearchModel& model, const EnvState& state,
                            std::span<const Action> actions, double discount);

// |rollout_value - model_sequence_value|.
double sequence_value_error(const SearchModel& model, const Environment& env,
                            const EnvState& state,
                            std::span<const Action> actions, double discount);

// prod_k policy(a_k | s_k) along real-environment states.
double sequence_probability(const ActionPolicy& policy, const Environment& env,
                            const EnvState& state,
                            std::span<const Action> actions);

std::vector<Action> sample_sequence(const ActionPolicy& policy,
                                    const Environment& env,
                                    const EnvState& state, int horizon,
                                    Rng& rng);

// |mean_i v(seq_i) - mean_i vhat(seq_i)| over the given sequences.
double paired_value_error(const SearchModel& model, const Environment& env,
                          const EnvState& state,
                          std::span<const std::vector<Action>> sequences,
                          double discount);

// Paired Monte Carlo estimate of |E[v] - E[vhat]| over sequences drawn from
// the policy in the real environment. Horizon 0 gives 0.
double policy_value_error(const SearchModel& model, const ActionPolicy& policy,
                          const Environment& env, const EnvState& state,
                          int horizon, double discount, int mc_samples,
                          Rng& rng);

// Same estimator for several horizons at once: M sequences of the longest
// horizon are sampled and each horizon uses their prefixes.
std::vector<double> policy_value_errors(const SearchModel& model,
                                        const ActionPolicy& policy,
                                        const Environment& env,
                                        const EnvState& state,
                                        std::span<const std::int64_t> horizons,
                                        double discount, int mc_samples,
                                        Rng& rng);

// Every |A|^h sequence in lexicographic order with its probability under the
// policy, its true value and its model value. Throws std::length_error when
// the count exceeds `cap`.
struct SequenceEnumeration {
  std::vector<std::vector<Action>> sequences;
  std::vector<double> probability;
  std::vector<double> true_value;
  std::vector<double> model_value;
};
SequenceEnumeration enumerate_sequences(const SearchModel& model,
                                        const ActionPolicy& policy,
                                        const Environment& env,
                                        const EnvState& state, int horizon,
                                        double discount, std::int64_t cap);
std::int64_t sequence_count(int action_count, int horizon);

// ---------------------------------------------------------------------------
// Checkpoints as seen by the audits.

struct StateSample {
  EnvState state;
  std::int64_t checkpoint_step = 0;
  std::int64_t episode = 0;
  std::int64_t step = 0;
};

// Runs `episodes` whole episodes with the policy and draws n_states samples
// uniformly (with replacement) over all visited (episode, step) pairs.
std::vector<StateSample> sample_on_policy_states(
    const ActionPolicy& policy, const Environment& env, std::int64_t episodes,
    std::int64_t n_states, std::uint64_t seed, std::int64_t checkpoint_step);

struct AuditAgent {
  std::int64_t step = 0;
  std::shared_ptr<const Network> network;
  // Model under audit; the learned model, or a substitute in tests.
  std::shared_ptr<const SearchModel> model;
  // Evaluated behavior policy: no noise, final temperature.
  std::shared_ptr<const ActionPolicy> behavior;
  // Generates on-policy states: no noise, temperature at this step.
  std::shared_ptr<const ActionPolicy> sampler;
};

AuditAgent make_audit_agent(const RunConfig& config, const Checkpoint& checkpoint);

// Per seed, the agents at `steps` loaded from the run directory. Throws
// MissingArtifactError naming the first absent checkpoint.
std::vector<std::vector<AuditAgent>> load_audit_agents(
    const RunConfig& config, const std::vector<std::int64_t>& steps);

// On-policy states for one agent of one seed, seeded from (seed, step).
std::vector<StateSample> audit_states(const AuditAgent& agent,
                                      const Environment& env,
                                      const RunConfig& config,
                                      std::uint64_t seed,
                                      std::int64_t n_states);

// ---------------------------------------------------------------------------
// Reports. `seeds[i]` holds the agents of config.random_seeds[i]. Aggregation
// runs over states within a seed, then over seeds.

struct HorizonCurve {
  std::vector<std::int64_t> steps;
  std::vector<std::int64_t> horizons;
  // per_seed[seed][step][horizon]: mean error over states.
  std::vector<std::vector<std::vector<double>>> per_seed;
  MeanStderr at(std::size_t step_index, std::size_t horizon_index) const;
};
HorizonCurve horizon_error_curve(
    const std::vector<std::vector<AuditAgent>>& seeds, const Environment& env,
    const RunConfig& config);

struct RankCurve {
  int horizon = 0;
  // Indexed by rank - 1 (rank 1 = most probable).
  std::vector<double> mean_probability;
  std::vector<double> mean_error;
  std::vector<double> sem_probability;
  std::vector<double> sem_error;
  std::vector<int> counts;
  // per_seed[seed][rank - 1].
  std::vector<std::vector<double>> per_seed_probability;
  std::vector<std::vector<double>> per_seed_error;
  // Spearman over the seed-mean curve.
  double spearman_rank_error = 0.0;
  double spearman_probability_error = 0.0;
  // Per state: total probability over the enumeration (should be 1).
  std::vector<double> probability_sums;
};
// Uses each seed's first agent. Throws std::length_error if |A|^h exceeds
// config.rank_enumeration_cap.
RankCurve rank_analysis(const std::vector<std::vector<AuditAgent>>& seeds,
                        const Environment& env, const RunConfig& config);

struct CrossMatrix {
  std::vector<std::int64_t> steps;
  int horizon = 0;
  // [seed][model row X][policy column Y].
  std::vector<std::vector<std::vector<double>>> per_seed;
  MeanStderr at(std::size_t row, std::size_t col) const;
  // Rows whose seed-mean minimum lies on the diagonal.
  int diagonal_minimum_rows() const;
};
CrossMatrix cross_model_matrix(
    const std::vector<std::vector<AuditAgent>>& seeds, const Environment& env,
    const RunConfig& config, int horizon);

struct SweepCell {
  ModelBackend model = ModelBackend::kLearned;
  PriorMode prior = PriorMode::kLearned;
  std::int64_t budget = 0;
  std::vector<double> per_seed;  // mean return over episodes
  MeanStderr summary() const { return summarize(per_seed); }
};
struct PlanSweepResult {
  std::vector<SweepCell> cells;
  std::vector<double> baseline_per_seed;  // greedy policy prior
  const SweepCell& cell(ModelBackend model, PriorMode prior,
                        std::int64_t budget) const;
};
// Greedy acting, no root noise, random-rollout leaves. Uses each seed's
// first agent.
PlanSweepResult plan_sweep(const std::vector<std::vector<AuditAgent>>& seeds,
                           const Environment& env, const RunConfig& config);

// Return of one greedy episode planning with `search` over `model`.
double planning_episode(const SearchModel& model, const Environment& env,
                        const SearchConfig& search, std::uint64_t seed);

struct PriorDiagnosticsRow {
  std::int64_t step = 0;
  PriorMode prior = PriorMode::kLearned;
  // Per seed means over states.
  std::vector<double> tv;
  std::vector<double> kl;
  std::vector<double> error;
};
struct PriorDiagnostics {
  std::vector<PriorDiagnosticsRow> rows;
  const PriorDiagnosticsRow& row(std::int64_t step, PriorMode prior) const;
};
// For every agent step: search from on-policy states under each prior and
// report TV and KL between the network prior and the smoothed root visits,
// plus the value error of the simulated root-to-leaf action sequences.
PriorDiagnostics prior_diagnostics(
    const std::vector<std::vector<AuditAgent>>& seeds, const Environment& env,
    const RunConfig& config);

}  // namespace mza
