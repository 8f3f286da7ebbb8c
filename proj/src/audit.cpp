#include "mza/audit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mza/parallel.hpp"
#include "mza/trainer.hpp"

namespace mza {
namespace {

std::vector<double> uniform_distribution(int n) {
  return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

std::size_t jobs_of(const RunConfig& config) {
  return static_cast<std::size_t>(std::max<std::int64_t>(1, config.jobs));
}

// Stream tags for per-task randomness.
constexpr std::uint64_t kStatesTag = 0xD157;
constexpr std::uint64_t kSequencesTag = 0x5E9C;
constexpr std::uint64_t kCrossTag = 0xC055;
constexpr std::uint64_t kSweepTag = 0x5EE9;
constexpr std::uint64_t kPriorTag = 0x9F10;

// Partial discounted sums after 0..h steps of real and model unrolls.
struct PrefixValues {
  std::vector<double> real;
  std::vector<double> model;
};

PrefixValues prefix_values(const SearchModel& model, const Environment& env,
                           const EnvState& state,
                           std::span<const Action> actions, double discount) {
  PrefixValues out;
  out.real.reserve(actions.size() + 1);
  out.model.reserve(actions.size() + 1);
  out.real.push_back(0.0);
  out.model.push_back(0.0);
  double real = 0.0, predicted = 0.0, scale = 1.0;
  EnvState s = state;
  ModelState m = model.encode(state);
  for (const Action a : actions) {
    if (!s.terminal) {
      StepResult r = env.step(s, a);
      real += scale * r.reward;
      s = std::move(r.next_state);
    }
    ModelStep ms = model.advance(m, a);
    predicted += scale * ms.reward;
    m = std::move(ms.next);
    scale *= discount;
    out.real.push_back(real);
    out.model.push_back(predicted);
  }
  return out;
}

}  // namespace

// --- policies ---------------------------------------------------------------

std::vector<double> UniformPolicy::distribution(const EnvState&) const {
  return uniform_distribution(action_count_);
}

int PriorPolicy::action_count() const {
  return network_->shape().action_count;
}

std::vector<double> PriorPolicy::distribution(const EnvState& state) const {
  return network_->policy(network_->represent(state.observation));
}

BehaviorPolicy::BehaviorPolicy(std::shared_ptr<const Network> network,
                               SearchConfig config)
    : network_(std::move(network)), model_(*network_), config_(config) {
  if (config_.add_root_noise || config_.leaf_eval != LeafEval::kValueNet ||
      config_.model_backend != ModelBackend::kLearned) {
    throw std::invalid_argument(
        "behavior policy needs a deterministic learned-model search");
  }
}

int BehaviorPolicy::action_count() const {
  return network_->shape().action_count;
}

std::vector<double> BehaviorPolicy::distribution(const EnvState& state) const {
  Key key{state.step_index, state.observation};
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  Rng unused = make_rng(0);
  auto result = run_search(model_, state, config_, unused);
  std::lock_guard lock(mutex_);
  return memo_.emplace(std::move(key), std::move(result.action_distribution))
      .first->second;
}

// --- sequence measurements -------------------------------------------------

double model_sequence_value(const SearchModel& model, const EnvState& state,
                            std::span<const Action> actions, double discount) {
  double value = 0.0;
  double scale = 1.0;
  ModelState m = model.encode(state);
  for (const Action a : actions) {
    ModelStep step = model.advance(m, a);
    value += scale * step.reward;
    scale *= discount;
    m = std::move(step.next);
  }
  return value;
}

double sequence_value_error(const SearchModel& model, const Environment& env,
                            const EnvState& state,
                            std::span<const Action> actions, double discount) {
  return std::abs(rollout_value(env, state, actions, discount) -
                  model_sequence_value(model, state, actions, discount));
}

double sequence_probability(const ActionPolicy& policy, const Environment& env,
                            const EnvState& state,
                            std::span<const Action> actions) {
  double p = 1.0;
  EnvState s = state;
  for (const Action a : actions) {
    if (s.terminal) {
      p *= 1.0 / policy.action_count();
      continue;
    }
    p *= policy.distribution(s).at(static_cast<std::size_t>(a.index));
    s = env.step(s, a).next_state;
  }
  return p;
}

std::vector<Action> sample_sequence(const ActionPolicy& policy,
                                    const Environment& env,
                                    const EnvState& state, int horizon,
                                    Rng& rng) {
  std::vector<Action> actions;
  actions.reserve(static_cast<std::size_t>(horizon));
  EnvState s = state;
  for (int k = 0; k < horizon; ++k) {
    if (s.terminal) {
      actions.push_back(Action{uniform_int(rng, policy.action_count())});
      continue;
    }
    const Action a{sample_categorical(policy.distribution(s), rng)};
    actions.push_back(a);
    s = env.step(s, a).next_state;
  }
  return actions;
}

double paired_value_error(const SearchModel& model, const Environment& env,
                          const EnvState& state,
                          std::span<const std::vector<Action>> sequences,
                          double discount) {
  if (sequences.empty()) return 0.0;
  double real = 0.0, predicted = 0.0;
  for (const auto& seq : sequences) {
    real += rollout_value(env, state, seq, discount);
    predicted += model_sequence_value(model, state, seq, discount);
  }
  const double n = static_cast<double>(sequences.size());
  return std::abs(real / n - predicted / n);
}

std::vector<double> policy_value_errors(const SearchModel& model,
                                        const ActionPolicy& policy,
                                        const Environment& env,
                                        const EnvState& state,
                                        std::span<const std::int64_t> horizons,
                                        double discount, int mc_samples,
                                        Rng& rng) {
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  std::int64_t longest = 0;
  for (auto h : horizons) {
    if (h < 0) throw std::invalid_argument("negative horizon");
    longest = std::max(longest, h);
  }
  std::vector<double> real(horizons.size(), 0.0);
  std::vector<double> predicted(horizons.size(), 0.0);
  for (int i = 0; i < mc_samples; ++i) {
    const auto seq =
        sample_sequence(policy, env, state, static_cast<int>(longest), rng);
    const auto v = prefix_values(model, env, state, seq, discount);
    for (std::size_t j = 0; j < horizons.size(); ++j) {
      real[j] += v.real[static_cast<std::size_t>(horizons[j])];
      predicted[j] += v.model[static_cast<std::size_t>(horizons[j])];
    }
  }
  std::vector<double> errors(horizons.size());
  const double n = mc_samples;
  for (std::size_t j = 0; j < horizons.size(); ++j) {
    errors[j] = std::abs(real[j] / n - predicted[j] / n);
  }
  return errors;
}

double policy_value_error(const SearchModel& model, const ActionPolicy& policy,
                          const Environment& env, const EnvState& state,
                          int horizon, double discount, int mc_samples,
                          Rng& rng) {
  const std::int64_t h = horizon;
  return policy_value_errors(model, policy, env, state,
                             std::span<const std::int64_t>(&h, 1), discount,
                             mc_samples, rng)[0];
}

std::int64_t sequence_count(int action_count, int horizon) {
  std::int64_t n = 1;
  for (int k = 0; k < horizon; ++k) {
    if (n > (std::int64_t{1} << 40) / action_count) return -1;  // overflow
    n *= action_count;
  }
  return n;
}

SequenceEnumeration enumerate_sequences(const SearchModel& model,
                                        const ActionPolicy& policy,
                                        const Environment& env,
                                        const EnvState& state, int horizon,
                                        double discount, std::int64_t cap) {
  const int actions = policy.action_count();
  const std::int64_t count = sequence_count(actions, horizon);
  if (count < 0 || count > cap) {
    throw std::length_error(
        "enumerating " + std::to_string(actions) + "^" +
        std::to_string(horizon) + " sequences exceeds the cap of " +
        std::to_string(cap));
  }
  SequenceEnumeration out;
  out.sequences.reserve(static_cast<std::size_t>(count));
  std::vector<Action> prefix;
  auto dfs = [&](auto&& self, const EnvState& s, const ModelState& m,
                 double prob, double real, double predicted,
                 double scale) -> void {
    if (static_cast<int>(prefix.size()) == horizon) {
      out.sequences.push_back(prefix);
      out.probability.push_back(prob);
      out.true_value.push_back(real);
      out.model_value.push_back(predicted);
      return;
    }
    const auto dist =
        s.terminal ? uniform_distribution(actions) : policy.distribution(s);
    for (int a = 0; a < actions; ++a) {
      const Action action{a};
      double next_real = real;
      EnvState next_state = s;
      if (!s.terminal) {
        StepResult r = env.step(s, action);
        next_real = real + scale * r.reward;
        next_state = std::move(r.next_state);
      }
      ModelStep ms = model.advance(m, action);
      prefix.push_back(action);
      self(self, next_state, ms.next, prob * dist[static_cast<std::size_t>(a)],
           next_real, predicted + scale * ms.reward, scale * discount);
      prefix.pop_back();
    }
  };
  dfs(dfs, state, model.encode(state), 1.0, 0.0, 0.0, 1.0);
  return out;
}

// --- agents and states ------------------------------------------------------

std::vector<StateSample> sample_on_policy_states(
    const ActionPolicy& policy, const Environment& env, std::int64_t episodes,
    std::int64_t n_states, std::uint64_t seed, std::int64_t checkpoint_step) {
  if (n_states <= 0) return {};
  if (episodes < 1) throw std::invalid_argument("need at least one episode");
  Rng rng = make_rng(seed, kStatesTag);
  std::vector<StateSample> visited;
  for (std::int64_t e = 0; e < episodes; ++e) {
    EnvState s = env.reset(mix_seed(seed, static_cast<std::uint64_t>(e)));
    std::int64_t t = 0;
    while (!s.terminal) {
      visited.push_back({s, checkpoint_step, e, t});
      const Action a{sample_categorical(policy.distribution(s), rng)};
      s = env.step(s, a).next_state;
      ++t;
    }
  }
  std::vector<StateSample> out;
  out.reserve(static_cast<std::size_t>(n_states));
  for (std::int64_t i = 0; i < n_states; ++i) {
    out.push_back(visited[static_cast<std::size_t>(
        uniform_int(rng, static_cast<int>(visited.size())))]);
  }
  return out;
}

AuditAgent make_audit_agent(const RunConfig& config,
                            const Checkpoint& checkpoint) {
  AuditAgent agent;
  agent.step = checkpoint.training_step;
  auto network = std::make_shared<const Network>(network_from_checkpoint(checkpoint));
  agent.network = network;
  agent.model = std::make_shared<const LearnedModel>(*network);
  const auto& schedule = config.visit_softmax_temperature_fn;
  agent.behavior = std::make_shared<const BehaviorPolicy>(
      network, acting_search_config(config, schedule.final_value(), false));
  agent.sampler = std::make_shared<const BehaviorPolicy>(
      network, acting_search_config(config, schedule.at(agent.step), false));
  return agent;
}

std::vector<std::vector<AuditAgent>> load_audit_agents(
    const RunConfig& config, const std::vector<std::int64_t>& steps) {
  // Check every path first so nothing is computed for an incomplete run.
  for (auto seed : config.random_seeds) {
    for (auto step : steps) {
      const auto path = checkpoint_path(checkpoint_directory(config, seed), step);
      if (!std::filesystem::exists(path)) throw MissingArtifactError(path);
    }
  }
  std::vector<std::vector<AuditAgent>> seeds;
  for (auto seed : config.random_seeds) {
    auto& agents = seeds.emplace_back();
    for (auto step : steps) {
      const auto path = checkpoint_path(checkpoint_directory(config, seed), step);
      agents.push_back(make_audit_agent(config, load_checkpoint(path)));
    }
  }
  return seeds;
}

std::vector<StateSample> audit_states(const AuditAgent& agent,
                                      const Environment& env,
                                      const RunConfig& config,
                                      std::uint64_t seed,
                                      std::int64_t n_states) {
  return sample_on_policy_states(
      *agent.sampler, env, config.audit_state_episodes, n_states,
      mix_seed(mix_seed(seed, kStatesTag), static_cast<std::uint64_t>(agent.step)),
      agent.step);
}

// --- horizon curve ----------------------------------------------------------

MeanStderr HorizonCurve::at(std::size_t step_index,
                            std::size_t horizon_index) const {
  std::vector<double> v;
  for (const auto& seed : per_seed) v.push_back(seed[step_index][horizon_index]);
  return summarize(v);
}

HorizonCurve horizon_error_curve(
    const std::vector<std::vector<AuditAgent>>& seeds, const Environment& env,
    const RunConfig& config) {
  HorizonCurve curve;
  curve.horizons = config.audit_horizons;
  if (!seeds.empty()) {
    for (const auto& a : seeds[0]) curve.steps.push_back(a.step);
  }
  const std::size_t H = curve.horizons.size();
  curve.per_seed.assign(
      seeds.size(), std::vector<std::vector<double>>(
                        curve.steps.size(), std::vector<double>(H, 0.0)));

  struct Task {
    std::size_t seed, step;
    std::vector<StateSample> states;
    std::vector<std::vector<double>> errors;  // [state][horizon]
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = 0; j < seeds[i].size(); ++j) {
      tasks.push_back({i, j, {}, {}});
    }
  }
  // States first (one task per agent), then errors (one per agent).
  parallel_for(tasks.size(), jobs_of(config), [&](std::size_t t) {
    Task& task = tasks[t];
    const AuditAgent& agent = seeds[task.seed][task.step];
    const auto seed = static_cast<std::uint64_t>(config.random_seeds[task.seed]);
    task.states = audit_states(agent, env, config, seed,
                               config.audit_states_per_checkpoint);
    task.errors.resize(task.states.size());
    for (std::size_t s = 0; s < task.states.size(); ++s) {
      Rng rng = make_rng(
          mix_seed(mix_seed(seed, kSequencesTag),
                   static_cast<std::uint64_t>(agent.step)),
          s);
      task.errors[s] = policy_value_errors(
          *agent.model, *agent.behavior, env, task.states[s].state,
          curve.horizons, config.discount_factor,
          static_cast<int>(config.audit_mc_samples), rng);
    }
  });
  for (const auto& task : tasks) {
    for (std::size_t h = 0; h < H; ++h) {
      std::vector<double> v;
      for (const auto& e : task.errors) v.push_back(e[h]);
      curve.per_seed[task.seed][task.step][h] = mean(v);
    }
  }
  return curve;
}

// --- rank analysis ----------------------------------------------------------

RankCurve rank_analysis(const std::vector<std::vector<AuditAgent>>& seeds,
                        const Environment& env, const RunConfig& config) {
  RankCurve curve;
  curve.horizon = static_cast<int>(config.rank_horizon);
  const int actions = env.spec().action_count;
  const std::int64_t count = sequence_count(actions, curve.horizon);
  if (count < 0 || count > config.rank_enumeration_cap) {
    throw std::length_error(
        "rank_horizon " + std::to_string(curve.horizon) + " needs " +
        std::to_string(actions) + "^" + std::to_string(curve.horizon) +
        " sequences, above rank_enumeration_cap " +
        std::to_string(config.rank_enumeration_cap));
  }
  const auto n = static_cast<std::size_t>(count);

  struct StateResult {
    std::vector<double> probability;  // sorted descending
    std::vector<double> error;
    double probability_sum = 0.0;
  };
  struct SeedWork {
    std::vector<StateSample> states;
    std::vector<StateResult> results;
  };
  std::vector<SeedWork> work(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    work[i].states = audit_states(
        seeds[i].at(0), env, config,
        static_cast<std::uint64_t>(config.random_seeds[i]), config.rank_states);
    work[i].results.resize(work[i].states.size());
  }
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t i = 0; i < work.size(); ++i) {
    for (std::size_t s = 0; s < work[i].states.size(); ++s) tasks.push_back({i, s});
  }
  parallel_for(tasks.size(), jobs_of(config), [&](std::size_t t) {
    const auto [i, s] = tasks[t];
    const AuditAgent& agent = seeds[i][0];
    const auto e = enumerate_sequences(
        *agent.model, *agent.behavior, env, work[i].states[s].state,
        curve.horizon, config.discount_factor, config.rank_enumeration_cap);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Stable: equal probabilities keep lexicographic sequence order.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return e.probability[a] > e.probability[b];
    });
    StateResult& r = work[i].results[s];
    for (std::size_t k : order) {
      r.probability.push_back(e.probability[k]);
      r.error.push_back(std::abs(e.true_value[k] - e.model_value[k]));
      r.probability_sum += e.probability[k];
    }
  });

  curve.per_seed_probability.assign(seeds.size(), std::vector<double>(n, 0.0));
  curve.per_seed_error.assign(seeds.size(), std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double states = static_cast<double>(work[i].results.size());
    for (const auto& r : work[i].results) {
      curve.probability_sums.push_back(r.probability_sum);
      for (std::size_t k = 0; k < n; ++k) {
        curve.per_seed_probability[i][k] += r.probability[k] / states;
        curve.per_seed_error[i][k] += r.error[k] / states;
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> p, e;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      p.push_back(curve.per_seed_probability[i][k]);
      e.push_back(curve.per_seed_error[i][k]);
    }
    const auto ps = summarize(p), es = summarize(e);
    curve.mean_probability.push_back(ps.mean);
    curve.sem_probability.push_back(ps.sem);
    curve.mean_error.push_back(es.mean);
    curve.sem_error.push_back(es.sem);
    curve.counts.push_back(es.count);
  }
  std::vector<double> ranks(n);
  std::iota(ranks.begin(), ranks.end(), 1.0);
  curve.spearman_rank_error = spearman(ranks, curve.mean_error);
  curve.spearman_probability_error =
      spearman(curve.mean_probability, curve.mean_error);
  return curve;
}

// --- cross-model matrix -----------------------------------------------------

MeanStderr CrossMatrix::at(std::size_t row, std::size_t col) const {
  std::vector<double> v;
  for (const auto& seed : per_seed) v.push_back(seed[row][col]);
  return summarize(v);
}

int CrossMatrix::diagonal_minimum_rows() const {
  int rows = 0;
  for (std::size_t x = 0; x < steps.size(); ++x) {
    const double diag = at(x, x).mean;
    bool minimal = true;
    for (std::size_t y = 0; y < steps.size(); ++y) {
      if (y != x && at(x, y).mean < diag) minimal = false;
    }
    rows += minimal ? 1 : 0;
  }
  return rows;
}

CrossMatrix cross_model_matrix(
    const std::vector<std::vector<AuditAgent>>& seeds, const Environment& env,
    const RunConfig& config, int horizon) {
  CrossMatrix m;
  m.horizon = horizon;
  if (!seeds.empty()) {
    for (const auto& a : seeds[0]) m.steps.push_back(a.step);
  }
  const std::size_t n = m.steps.size();
  m.per_seed.assign(seeds.size(), std::vector<std::vector<double>>(
                                      n, std::vector<double>(n, 0.0)));
  // States for row X come from the on-policy distribution of checkpoint X.
  std::vector<std::vector<std::vector<StateSample>>> states(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    states[i].resize(n);
  }
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t x = 0; x < n; ++x) rows.push_back({i, x});
  }
  parallel_for(rows.size(), jobs_of(config), [&](std::size_t t) {
    const auto [i, x] = rows[t];
    states[i][x] = audit_states(
        seeds[i][x], env, config,
        static_cast<std::uint64_t>(config.random_seeds[i]),
        config.audit_states_per_checkpoint);
  });
  struct Cell {
    std::size_t seed, x, y;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) cells.push_back({i, x, y});
    }
  }
  parallel_for(cells.size(), jobs_of(config), [&](std::size_t t) {
    const Cell c = cells[t];
    const auto seed = static_cast<std::uint64_t>(config.random_seeds[c.seed]);
    const AuditAgent& model = seeds[c.seed][c.x];
    const AuditAgent& policy = seeds[c.seed][c.y];
    const auto& row_states = states[c.seed][c.x];
    std::vector<double> errors;
    for (std::size_t s = 0; s < row_states.size(); ++s) {
      Rng rng = make_rng(
          mix_seed(mix_seed(mix_seed(seed, kCrossTag),
                            static_cast<std::uint64_t>(model.step)),
                   static_cast<std::uint64_t>(policy.step)),
          s);
      errors.push_back(policy_value_error(
          *model.model, *policy.behavior, env, row_states[s].state, horizon,
          config.discount_factor, static_cast<int>(config.audit_mc_samples),
          rng));
    }
    m.per_seed[c.seed][c.x][c.y] = mean(errors);
  });
  return m;
}

// --- plan sweep -------------------------------------------------------------

const SweepCell& PlanSweepResult::cell(ModelBackend model, PriorMode prior,
                                       std::int64_t budget) const {
  for (const auto& c : cells) {
    if (c.model == model && c.prior == prior && c.budget == budget) return c;
  }
  throw std::out_of_range("no sweep cell for budget " + std::to_string(budget));
}

double planning_episode(const SearchModel& model, const Environment& env,
                        const SearchConfig& search, std::uint64_t seed) {
  Rng rng = make_rng(seed, kSweepTag);
  EnvState s = env.reset(seed);
  double total = 0.0;
  while (!s.terminal) {
    const auto result = run_search(model, s, search, rng);
    const Action a = choose_action(result.action_distribution, 0.0, rng);
    StepResult r = env.step(s, a);
    total += r.reward;
    s = std::move(r.next_state);
  }
  return total;
}

PlanSweepResult plan_sweep(const std::vector<std::vector<AuditAgent>>& seeds,
                           const Environment& env, const RunConfig& config) {
  const auto& budgets = config.sweep_budgets;
  if (budgets.empty()) throw std::invalid_argument("sweep_budgets is empty");
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] <= budgets[i - 1]) {
      throw std::invalid_argument("sweep_budgets must be strictly increasing");
    }
  }
  PlanSweepResult result;
  for (auto model : {ModelBackend::kLearned, ModelBackend::kGroundTruth}) {
    for (auto prior : {PriorMode::kLearned, PriorMode::kUniform}) {
      for (auto b : budgets) {
        SweepCell c;
        c.model = model;
        c.prior = prior;
        c.budget = b;
        c.per_seed.assign(seeds.size(), 0.0);
        result.cells.push_back(std::move(c));
      }
    }
  }
  result.baseline_per_seed.assign(seeds.size(), 0.0);
  const std::size_t episodes =
      static_cast<std::size_t>(std::max<std::int64_t>(1, config.sweep_episodes));
  // Task index: (seed, cell or baseline, episode); results summed per cell.
  const std::size_t columns = result.cells.size() + 1;
  std::vector<double> returns(seeds.size() * columns * episodes, 0.0);
  parallel_for(returns.size(), jobs_of(config), [&](std::size_t t) {
    const std::size_t e = t % episodes;
    const std::size_t col = (t / episodes) % columns;
    const std::size_t i = t / (episodes * columns);
    const AuditAgent& agent = seeds[i].at(0);
    const auto episode_seed = mix_seed(
        mix_seed(static_cast<std::uint64_t>(config.random_seeds[i]), kSweepTag),
        e);
    if (col == result.cells.size()) {
      returns[t] = policy_prior_episode(*agent.network, env, episode_seed, true);
      return;
    }
    const SweepCell& c = result.cells[col];
    SearchConfig search = acting_search_config(config, 0.0, false);
    search.num_simulations = static_cast<int>(c.budget);
    search.prior_mode = c.prior;
    search.model_backend = c.model;
    search.leaf_eval = LeafEval::kRollout;
    search.rollout_horizon = static_cast<int>(config.sweep_rollout_horizon);
    if (c.model == ModelBackend::kLearned) {
      returns[t] = planning_episode(*agent.model, env, search, episode_seed);
    } else {
      EnvironmentModel truth(env, agent.network.get());
      returns[t] = planning_episode(truth, env, search, episode_seed);
    }
  });
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const std::size_t col = (t / episodes) % columns;
    const std::size_t i = t / (episodes * columns);
    double& slot = col == result.cells.size() ? result.baseline_per_seed[i]
                                              : result.cells[col].per_seed[i];
    slot += returns[t] / static_cast<double>(episodes);
  }
  return result;
}

// --- prior diagnostics ------------------------------------------------------

const PriorDiagnosticsRow& PriorDiagnostics::row(std::int64_t step,
                                                 PriorMode prior) const {
  for (const auto& r : rows) {
    if (r.step == step && r.prior == prior) return r;
  }
  throw std::out_of_range("no prior diagnostics row for step " +
                          std::to_string(step));
}

PriorDiagnostics prior_diagnostics(
    const std::vector<std::vector<AuditAgent>>& seeds, const Environment& env,
    const RunConfig& config) {
  const bool per_step = config.prior_error_mode == "per_step";
  if (!per_step && config.prior_error_mode != "trajectory_sum") {
    throw ConfigError("prior_error_mode",
                      "prior_error_mode must be trajectory_sum or per_step");
  }
  PriorDiagnostics out;
  const std::size_t steps = seeds.empty() ? 0 : seeds[0].size();
  const PriorMode priors[] = {PriorMode::kLearned, PriorMode::kUniform};
  for (std::size_t j = 0; j < steps; ++j) {
    for (auto prior : priors) {
      PriorDiagnosticsRow r;
      r.step = seeds[0][j].step;
      r.prior = prior;
      r.tv.assign(seeds.size(), 0.0);
      r.kl.assign(seeds.size(), 0.0);
      r.error.assign(seeds.size(), 0.0);
      out.rows.push_back(std::move(r));
    }
  }
  struct Task {
    std::size_t seed, step;
    std::vector<StateSample> states;
    // [prior][state]
    std::vector<double> tv[2], kl[2], error[2];
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = 0; j < steps; ++j) tasks.push_back({i, j, {}, {}, {}, {}});
  }
  parallel_for(tasks.size(), jobs_of(config), [&](std::size_t t) {
    Task& task = tasks[t];
    const AuditAgent& agent = seeds[task.seed][task.step];
    const auto seed = static_cast<std::uint64_t>(config.random_seeds[task.seed]);
    task.states = audit_states(agent, env, config, seed, config.prior_states);
    for (int p = 0; p < 2; ++p) {
      SearchConfig search = acting_search_config(config, 1.0, false);
      search.num_simulations = static_cast<int>(config.prior_budget);
      search.prior_mode = priors[p];
      search.record_trajectories = true;
      for (std::size_t s = 0; s < task.states.size(); ++s) {
        const EnvState& root = task.states[s].state;
        Rng rng = make_rng(mix_seed(mix_seed(seed, kPriorTag),
                                    static_cast<std::uint64_t>(agent.step)),
                           s);
        const auto result = run_search(*agent.model, root, search, rng);
        const auto prior_policy =
            agent.model->evaluate(agent.model->encode(root)).policy;
        task.tv[p].push_back(
            total_variation(prior_policy, result.empirical_visit_distribution));
        task.kl[p].push_back(
            kl_divergence(prior_policy, result.empirical_visit_distribution));
        std::vector<double> errors;
        for (const auto& traj : result.simulated_trajectories) {
          if (per_step) {
            const auto v = prefix_values(*agent.model, env, root, traj.actions,
                                         1.0);
            double sum = 0.0;
            for (std::size_t k = 1; k < v.real.size(); ++k) {
              sum += std::abs((v.real[k] - v.real[k - 1]) -
                              (v.model[k] - v.model[k - 1]));
            }
            errors.push_back(traj.actions.empty()
                                 ? 0.0
                                 : sum / static_cast<double>(traj.actions.size()));
          } else {
            errors.push_back(sequence_value_error(
                *agent.model, env, root, traj.actions, config.discount_factor));
          }
        }
        task.error[p].push_back(mean(errors));
      }
    }
  });
  for (const auto& task : tasks) {
    for (int p = 0; p < 2; ++p) {
      const std::size_t idx = task.step * 2 + static_cast<std::size_t>(p);
      auto& r = out.rows[idx];
      r.tv[task.seed] = mean(task.tv[p]);
      r.kl[task.seed] = mean(task.kl[p]);
      r.error[task.seed] = mean(task.error[p]);
    }
  }
  return out;
}

}  // namespace mza
