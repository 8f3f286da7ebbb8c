// Acceptance gate: runs each criterion and prints one PASS/FAIL line per
// criterion. Trained CartPole checkpoints are cached under the build tree,
// keyed by the config digest. Pass criterion numbers as arguments to run a
// subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "mza/audit.hpp"
#include "mza/checkpoint.hpp"
#include "mza/config.hpp"
#include "mza/loss.hpp"
#include "mza/trainer.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace mza;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "muzero-audit");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// ---------------------------------------------------------------------------
// Trained desk-scale agents, shared by criteria 2 and 4 to 10.

class DeskRun {
 public:
  DeskRun() {
    config_ = load_config_file(MZA_DESK_CONFIG);
    config_.output_dir = MZA_ACCEPTANCE_CACHE;
    config_.run_id = config_.digest_hex();
    config_.validate();
  }

  const RunConfig& config() const { return config_; }

  // Trains unless a complete run with this digest is cached.
  void ensure_trained() {
    if (ready_) return;
    const fs::path seconds_file = run_directory(config_) / "train_seconds.txt";
    if (!complete() || !fs::exists(seconds_file)) {
      std::cout << "training desk-scale agents into " << run_directory(config_)
                << std::endl;
      const auto start = Clock::now();
      if (run_cli({"train", "--config=" MZA_DESK_CONFIG,
                   "--output_dir=" + config_.output_dir,
                   "--run_id=" + config_.run_id}) != 0) {
        throw std::runtime_error("training failed");
      }
      std::ofstream(seconds_file) << seconds_since(start) << "\n";
    }
    std::ifstream(seconds_file) >> train_seconds_;
    ready_ = true;
  }

  double train_seconds() const { return train_seconds_; }

  std::vector<std::vector<AuditAgent>> agents(std::vector<std::int64_t> steps) {
    ensure_trained();
    return load_audit_agents(config_, steps);
  }

  // (step, seed) -> (prior, behavior) from the learning curve CSV.
  std::map<std::int64_t, std::vector<std::pair<double, double>>> curve() {
    ensure_trained();
    std::istringstream csv(slurp(reports_directory(config_) / "learning_curve.csv"));
    std::string line;
    std::getline(csv, line);
    std::map<std::int64_t, std::vector<std::pair<double, double>>> out;
    while (std::getline(csv, line)) {
      std::istringstream row(line);
      std::string step, seed, prior, behavior;
      std::getline(row, step, ',');
      std::getline(row, seed, ',');
      std::getline(row, prior, ',');
      std::getline(row, behavior, ',');
      out[std::stoll(step)].push_back({std::stod(prior), std::stod(behavior)});
    }
    return out;
  }

 private:
  bool complete() const {
    if (!fs::exists(reports_directory(config_) / "learning_curve.csv")) return false;
    for (auto seed : config_.random_seeds) {
      for (auto step : config_.resolved_checkpoint_steps()) {
        if (!fs::exists(checkpoint_path(checkpoint_directory(config_, seed), step))) {
          return false;
        }
      }
    }
    return true;
  }

  RunConfig config_;
  bool ready_ = false;
  double train_seconds_ = 0.0;
};

// ---------------------------------------------------------------------------
// Criteria.

Verdict gradient_correctness() {
  const auto start = Clock::now();
  const NetworkShape shape{4, 2, 3, 4, 3};
  const Network net = Network::initialize(shape, 101);
  Rng rng = make_rng(55);
  std::vector<TrainingExample> batch;
  const int unroll = 4;
  for (int b = 0; b < 4; ++b) {
    TrainingExample ex;
    for (int j = 0; j < shape.observation_dim; ++j) ex.observation.push_back(uniform(rng, -1, 1));
    for (int k = 0; k <= unroll; ++k) {
      ex.target.reward_targets.push_back(uniform(rng, 0.0, 2.0));
      ex.target.value_targets.push_back(uniform(rng, -2.0, 6.0));
      const double p = uniform01(rng);
      ex.target.policy_targets.push_back({p, 1.0 - p});
      if (k < unroll) ex.target.actions.push_back(Action{uniform_int(rng, 2)});
    }
    ex.weight = uniform(rng, 0.5, 1.0);
    batch.push_back(std::move(ex));
  }
  // The dynamics gradient scale alters the gradient on purpose, so the
  // derivative check runs with it at 1.
  const LossConfig config{1.0, 1.0};
  const auto result = unrolled_loss(net, batch, config);
  const auto check = testing::check_gradients(
      net.params(), result.gradients, [&](const ParameterSet& p) {
        return unrolled_loss(Network(shape, p), batch, config, false).breakdown.total;
      });
  const double secs = seconds_since(start);
  return {check.max_relative_error <= 1e-3 && secs < 60.0,
          "max relative error " + fmt(check.max_relative_error) + " over " +
              std::to_string(check.coordinates) + " coordinates in " + fmt(secs, 3) + " s"};
}

Verdict oracle_zero(DeskRun& run) {
  auto agents = run.agents(run.config().resolved_audit_steps());
  const auto start = Clock::now();
  RunConfig config = run.config();
  config.audit_states_per_checkpoint = 8;
  config.audit_mc_samples = 16;
  config.rank_states = 4;
  config.prior_states = 8;
  const auto env = make_environment(config);
  for (auto& seed : agents) {
    for (auto& a : seed) a.model = std::make_shared<EnvironmentModel>(*env, a.network.get());
  }
  double worst = 0.0;
  auto track = [&](double e) { worst = std::max(worst, std::abs(e)); };

  // Single sequences and single states.
  const auto& first = agents[0].back();
  const auto states = audit_states(first, *env, config, 0, 4);
  Rng rng = make_rng(3);
  for (const auto& s : states) {
    const auto seq = sample_sequence(*first.behavior, *env, s.state, 20, rng);
    track(sequence_value_error(*first.model, *env, s.state, seq, config.discount_factor));
    track(policy_value_error(*first.model, *first.behavior, *env, s.state, 10,
                             config.discount_factor, 16, rng));
  }
  for (const auto& per_step : horizon_error_curve(agents, *env, config).per_seed) {
    for (const auto& curve : per_step) {
      for (double e : curve) track(e);
    }
  }
  std::vector<std::vector<AuditAgent>> finals;
  for (const auto& seed : agents) finals.push_back({seed.back()});
  for (double e : rank_analysis(finals, *env, config).mean_error) track(e);
  for (const auto& m : cross_model_matrix(agents, *env, config, 10).per_seed) {
    for (const auto& row : m) {
      for (double e : row) track(e);
    }
  }
  for (const char* mode : {"trajectory_sum", "per_step"}) {
    config.prior_error_mode = mode;
    for (const auto& row : prior_diagnostics(agents, *env, config).rows) {
      for (double e : row.error) track(e);
    }
  }
  const double secs = seconds_since(start);
  return {worst == 0.0 && secs < 300.0,
          "largest error " + fmt(worst) + " in " + fmt(secs, 3) + " s"};
}

Verdict search_sanity() {
  const auto start = Clock::now();
  ChainMdp chain;
  EnvironmentModel model(chain);
  const double gamma = chain.spec().discount;
  const EnvState s0 = chain.reset(0);
  // Exact optimal action by exhaustive dynamic programming.
  std::function<double(const EnvState&, int)> v = [&](const EnvState& s, int depth) {
    if (s.terminal || depth == 0) return 0.0;
    double best = -1e300;
    for (int a = 0; a < 2; ++a) {
      const auto r = chain.step(s, Action{a});
      best = std::max(best, r.reward + gamma * v(r.next_state, depth - 1));
    }
    return best;
  };
  int optimal = 0;
  double best_q = -1e300;
  for (int a = 0; a < 2; ++a) {
    const auto r = chain.step(s0, Action{a});
    const double q = r.reward + gamma * v(r.next_state, 20);
    if (q > best_q) best_q = q, optimal = a;
  }
  std::string detail;
  bool pass = true;
  for (int budget : {64, 100, 256, 1024}) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      SearchConfig c;
      c.num_simulations = budget;
      c.discount = gamma;
      c.prior_mode = PriorMode::kUniform;
      c.model_backend = ModelBackend::kGroundTruth;
      c.leaf_eval = LeafEval::kRollout;
      c.temperature = 0.0;
      Rng rng = make_rng(seed);
      const auto r = run_search(model, s0, c, rng);
      hits += choose_action(r.action_distribution, 0.0, rng).index == optimal;
    }
    pass = pass && hits == 100;
    detail += "budget " + std::to_string(budget) + ": " + std::to_string(hits) + "/100; ";
  }
  const double secs = seconds_since(start);
  return {pass && secs < 60.0, detail + "in " + fmt(secs, 3) + " s"};
}

Verdict training_trend(DeskRun& run) {
  const auto curve = run.curve();
  int better = 0;
  double final_behavior = 0.0;
  std::string detail = "seed-mean behavior/prior by step:";
  for (const auto& [step, seeds] : curve) {
    double prior = 0.0, behavior = 0.0;
    for (const auto& [p, b] : seeds) {
      prior += p / seeds.size();
      behavior += b / seeds.size();
    }
    better += behavior >= prior;
    final_behavior = behavior;
    detail += " " + std::to_string(step) + ":" + fmt(behavior) + "/" + fmt(prior);
  }
  const double fraction = static_cast<double>(better) / curve.size();
  const bool pass = final_behavior >= 150.0 && fraction >= 0.8 &&
                    run.train_seconds() <= 7200.0 &&
                    run.config().random_seeds.size() >= 5;
  return {pass, "final behavior return " + fmt(final_behavior) + ", behavior >= prior at " +
                    fmt(100 * fraction, 3) + "% of checkpoints, training " +
                    fmt(run.train_seconds(), 4) + " s; " + detail};
}

Verdict horizon_trend(DeskRun& run) {
  const std::int64_t step = run.config().resolved_audit_step();
  const auto agents = run.agents({step});
  const auto env = make_environment(run.config());
  const auto curve = horizon_error_curve(agents, *env, run.config());
  std::vector<double> means;
  for (std::size_t h = 0; h < curve.horizons.size(); ++h) means.push_back(curve.at(0, h).mean);
  int inversions = 0;
  std::string detail = "step " + std::to_string(step) + " errors:";
  for (std::size_t h = 0; h < means.size(); ++h) {
    if (h > 0 && !(means[h] > means[h - 1])) ++inversions;
    detail += " " + fmt(means[h]);
  }
  return {inversions <= 1, std::to_string(inversions) + " inversions; " + detail};
}

Verdict rank_trend(DeskRun& run) {
  const std::int64_t step = run.config().resolved_audit_step();
  const auto agents = run.agents({step});
  const auto env = make_environment(run.config());
  const auto curve = rank_analysis(agents, *env, run.config());
  const double rho = curve.spearman_probability_error;
  return {rho < 0.0 && std::abs(rho) >= 0.5,
          "h=" + std::to_string(curve.horizon) + ", spearman(probability, error) " +
              fmt(rho) + ", spearman(rank, error) " + fmt(curve.spearman_rank_error)};
}

Verdict diagonal_trend(DeskRun& run) {
  const auto steps = run.config().resolved_audit_steps();
  const auto agents = run.agents(steps);
  const auto env = make_environment(run.config());
  bool pass = steps.size() == 4;
  std::string detail;
  for (int h : {10, 50}) {
    RunConfig config = run.config();
    if (h == 50) {
      config.audit_states_per_checkpoint = 16;
      config.audit_mc_samples = 16;
    }
    const auto m = cross_model_matrix(agents, *env, config, h);
    const int rows = m.diagonal_minimum_rows();
    pass = pass && rows >= 3;
    detail += "h=" + std::to_string(h) + ": " + std::to_string(rows) + "/4 rows [";
    for (std::size_t x = 0; x < m.steps.size(); ++x) {
      for (std::size_t y = 0; y < m.steps.size(); ++y) {
        detail += fmt(m.at(x, y).mean, 3) + (y + 1 < m.steps.size() ? " " : "");
      }
      detail += x + 1 < m.steps.size() ? "; " : "] ";
    }
  }
  return {pass, detail};
}

Verdict plan_sweep_ordering(DeskRun& run) {
  const std::int64_t step = run.config().resolved_audit_step();
  const auto agents = run.agents({step});
  const auto env = make_environment(run.config());
  const auto result = plan_sweep(agents, *env, run.config());
  const std::int64_t budget = run.config().sweep_budgets.back();
  const double gt_prior = result.cell(ModelBackend::kGroundTruth, PriorMode::kLearned, budget).summary().mean;
  const double gt_uniform = result.cell(ModelBackend::kGroundTruth, PriorMode::kUniform, budget).summary().mean;
  const double learned_prior = result.cell(ModelBackend::kLearned, PriorMode::kLearned, budget).summary().mean;
  const double learned_uniform = result.cell(ModelBackend::kLearned, PriorMode::kUniform, budget).summary().mean;
  const bool pass = gt_prior >= gt_uniform && gt_uniform >= learned_uniform &&
                    learned_prior >= learned_uniform;
  return {pass, "budget " + std::to_string(budget) + ": ground_truth+prior " + fmt(gt_prior) +
                    ", ground_truth+uniform " + fmt(gt_uniform) + ", learned+prior " +
                    fmt(learned_prior) + ", learned+uniform " + fmt(learned_uniform)};
}

Verdict prior_trend(DeskRun& run) {
  const std::int64_t step = run.config().resolved_audit_step();
  const auto agents = run.agents({step});
  const auto env = make_environment(run.config());
  const auto diag = prior_diagnostics(agents, *env, run.config());
  const auto& p = diag.row(step, PriorMode::kLearned);
  const auto& u = diag.row(step, PriorMode::kUniform);
  const double tv_p = mean(p.tv), tv_u = mean(u.tv);
  const double kl_p = mean(p.kl), kl_u = mean(u.kl);
  const double e_p = mean(p.error), e_u = mean(u.error);
  // Reported only: the per-step error removes the effect of search depth.
  RunConfig per_step = run.config();
  per_step.prior_error_mode = "per_step";
  const auto by_step = prior_diagnostics(agents, *env, per_step);
  const double s_p = mean(by_step.row(step, PriorMode::kLearned).error);
  const double s_u = mean(by_step.row(step, PriorMode::kUniform).error);
  return {tv_p < tv_u && kl_p < kl_u && e_p < e_u,
          "policy vs uniform prior: TV " + fmt(tv_p) + " vs " + fmt(tv_u) + ", KL " +
              fmt(kl_p) + " vs " + fmt(kl_u) + ", error " + fmt(e_p) + " vs " + fmt(e_u) +
              " (per-step error " + fmt(s_p) + " vs " + fmt(s_u) + ", not gated)"};
}

Verdict determinism(DeskRun& run) {
  const std::vector<std::string> flags{
      "--random_seeds=0,1", "--total_training_steps=40", "--training_steps_per_loop=10",
      "--checkpoint_steps=0,20,40", "--batch_size=16", "--num_simulations=8",
      "--max_episode_steps=60", "--eval_episodes=2", "--audit_state_episodes=2",
      "--audit_states_per_checkpoint=4", "--audit_mc_samples=4", "--audit_horizons=1,2,3",
      "--rank_horizon=3", "--rank_states=3", "--cross_horizon=3", "--sweep_budgets=2,4",
      "--sweep_episodes=1", "--prior_budget=8", "--prior_states=3", "--jobs=2",
      "--num_actors=2"};
  const fs::path root = fs::path(MZA_ACCEPTANCE_CACHE) / "determinism";
  std::map<std::string, std::string> first;
  bool identical = true;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / ("pass_" + std::to_string(pass));
    fs::remove_all(dir);
    std::vector<std::string> base = flags;
    base.push_back("--output_dir=" + dir.string());
    auto with = [&](std::vector<std::string> cmd) {
      cmd.insert(cmd.end(), base.begin(), base.end());
      return run_cli(cmd);
    };
    if (with({"train"}) != 0) return {false, "tiny training run failed"};
    for (const char* kind : {"horizon", "rank", "cross", "sweep", "prior"}) {
      if (with({"audit", kind}) != 0) return {false, std::string("audit failed: ") + kind};
    }
    for (const auto& entry : fs::directory_iterator(dir / "run" / "reports")) {
      if (entry.path().extension() != ".csv") continue;
      const auto name = entry.path().filename().string();
      if (pass == 0) {
        first[name] = slurp(entry.path());
      } else if (first[name] != slurp(entry.path())) {
        identical = false;
      }
    }
  }

  // Round trip of a trained checkpoint through bytes and through a file.
  run.ensure_trained();
  const auto& config = run.config();
  const auto path = checkpoint_path(checkpoint_directory(config, config.random_seeds[0]),
                                    config.resolved_audit_step());
  const Checkpoint original = load_checkpoint(path);
  const Checkpoint decoded = decode_checkpoint(encode_checkpoint(original));
  const fs::path copy = root / "roundtrip.ckpt";
  save_checkpoint(copy, decoded);
  const Checkpoint reloaded = load_checkpoint(copy);
  const Network a = network_from_checkpoint(original);
  const Network b = network_from_checkpoint(reloaded);
  const auto env = make_environment(config);
  bool exact = decoded == original && reloaded == original;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto obs = env->reset(s).observation;
    const auto x = a.initial_inference(obs), y = b.initial_inference(obs);
    exact = exact && x.policy_logits == y.policy_logits && x.value_logits == y.value_logits &&
            x.latent == y.latent;
    const auto rx = a.recurrent_inference(x.latent, Action{static_cast<int>(s % 2)});
    const auto ry = b.recurrent_inference(y.latent, Action{static_cast<int>(s % 2)});
    exact = exact && rx.reward_logits == ry.reward_logits && rx.latent == ry.latent;
  }
  return {identical && exact && first.size() == 6,
          std::to_string(first.size()) + " CSVs " + (identical ? "identical" : "differ") +
              " across reruns; checkpoint round trip " + (exact ? "bit-exact" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  DeskRun run;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"oracle-zero audits", [&] { return oracle_zero(run); }},
      {"search sanity", search_sanity},
      {"training trend", [&] { return training_trend(run); }},
      {"horizon trend", [&] { return horizon_trend(run); }},
      {"rank trend", [&] { return rank_trend(run); }},
      {"diagonal trend", [&] { return diagonal_trend(run); }},
      {"plan-sweep ordering", [&] { return plan_sweep_ordering(run); }},
      {"prior diagnostics", [&] { return prior_trend(run); }},
      {"determinism and serialization", [&] { return determinism(run); }},
  };
  int failures = 0;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(number)) continue;
    const auto start = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::ostringstream line;
    line << (v.pass ? "PASS" : "FAIL") << " criterion " << number << " ("
         << criteria[i].first << "): " << v.detail << " [" << fmt(seconds_since(start), 3)
         << " s]";
    std::cout << line.str() << std::endl;
    lines.push_back(line.str());
    failures += !v.pass;
  }
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l.substr(0, l.find(':')) << "\n";
  return failures == 0 ? 0 : 1;
}
