#include "commands.hpp"

#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mza/audit.hpp"
#include "mza/config.hpp"
#include "mza/loss.hpp"
#include "mza/parallel.hpp"
#include "mza/report.hpp"
#include "mza/trainer.hpp"

namespace mza::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kAuditKinds[] = {"horizon", "rank", "cross", "sweep", "prior"};

// Defaults, then the config file, then --key=value flags.
RunConfig resolve_config(const std::string& config_file,
                         const std::map<std::string, std::string>& flags) {
  RunConfig config;
  if (!config_file.empty()) {
    if (!fs::exists(config_file)) {
      throw ConfigError("config", "config file not found: " + config_file);
    }
    config = load_config_file(config_file);
  }
  for (const auto& [key, value] : flags) config.set(key, value);
  config.validate();
  return config;
}

json stats_json(const MeanStderr& s) {
  return {{"mean", s.mean}, {"stderr", s.sem}, {"count", s.count}};
}

std::string model_name(ModelBackend b) { return to_string(b); }
std::string prior_name(PriorMode p) { return to_string(p); }

int cmd_train(const RunConfig& config, std::ostream& out) {
  const auto& seeds = config.random_seeds;
  std::vector<std::vector<LearningCurvePoint>> curves(seeds.size());
  parallel_for(seeds.size(), static_cast<std::size_t>(config.jobs),
               [&](std::size_t i) {
                 curves[i] = train_seed(
                     config, static_cast<std::uint64_t>(seeds[i]),
                     checkpoint_directory(config, seeds[i]));
               });
  CsvTable table({"step", "seed", "policy_prior_return_mean",
                  "behavior_return_mean"});
  json per_seed = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (const auto& p : curves[i]) {
      table.add_row({CsvTable::cell(p.step), CsvTable::cell(p.seed),
                     CsvTable::cell(p.policy_prior_return_mean),
                     CsvTable::cell(p.behavior_return_mean)});
    }
    per_seed.push_back({{"seed", seeds[i]},
                        {"checkpoint_dir",
                         checkpoint_directory(config, seeds[i]).string()}});
  }
  write_report(reports_directory(config), "learning_curve", table, config,
               {{"checkpoint_steps", config.resolved_checkpoint_steps()},
                {"runs", per_seed}});
  out << "trained " << seeds.size() << " seed(s); reports in "
      << reports_directory(config).string() << "\n";
  return kOk;
}

void audit_horizon(const RunConfig& config, const Environment& env) {
  const auto agents = load_audit_agents(config, config.resolved_audit_steps());
  const auto curve = horizon_error_curve(agents, env, config);
  CsvTable table({"step", "horizon", "mean_error", "stderr", "seeds"});
  json rows = json::array();
  for (std::size_t s = 0; s < curve.steps.size(); ++s) {
    for (std::size_t h = 0; h < curve.horizons.size(); ++h) {
      const auto st = curve.at(s, h);
      table.add_row({CsvTable::cell(curve.steps[s]),
                     CsvTable::cell(curve.horizons[h]), CsvTable::cell(st.mean),
                     CsvTable::cell(st.sem), CsvTable::cell(st.count)});
    }
  }
  write_report(reports_directory(config), "horizon", table, config,
               {{"per_seed", curve.per_seed}, {"steps", curve.steps},
                {"horizons", curve.horizons}});
}

void audit_rank(const RunConfig& config, const Environment& env) {
  const auto agents =
      load_audit_agents(config, {config.resolved_audit_step()});
  const auto curve = rank_analysis(agents, env, config);
  CsvTable table({"rank", "mean_probability", "stderr_probability",
                  "mean_error", "stderr_error", "seeds"});
  for (std::size_t k = 0; k < curve.mean_error.size(); ++k) {
    table.add_row({CsvTable::cell(static_cast<std::int64_t>(k + 1)),
                   CsvTable::cell(curve.mean_probability[k]),
                   CsvTable::cell(curve.sem_probability[k]),
                   CsvTable::cell(curve.mean_error[k]),
                   CsvTable::cell(curve.sem_error[k]),
                   CsvTable::cell(curve.counts[k])});
  }
  write_report(reports_directory(config), "rank", table, config,
               {{"step", config.resolved_audit_step()},
                {"horizon", curve.horizon},
                {"spearman_rank_error", curve.spearman_rank_error},
                {"spearman_probability_error", curve.spearman_probability_error},
                {"per_seed_error", curve.per_seed_error}});
}

void audit_cross(const RunConfig& config, const Environment& env) {
  const auto agents = load_audit_agents(config, config.resolved_audit_steps());
  const int h = static_cast<int>(config.cross_horizon);
  const auto m = cross_model_matrix(agents, env, config, h);
  CsvTable table({"model_step", "policy_step", "mean_error", "stderr", "seeds"});
  for (std::size_t x = 0; x < m.steps.size(); ++x) {
    for (std::size_t y = 0; y < m.steps.size(); ++y) {
      const auto st = m.at(x, y);
      table.add_row({CsvTable::cell(m.steps[x]), CsvTable::cell(m.steps[y]),
                     CsvTable::cell(st.mean), CsvTable::cell(st.sem),
                     CsvTable::cell(st.count)});
    }
  }
  write_report(reports_directory(config), "cross_h" + std::to_string(h), table,
               config,
               {{"horizon", h}, {"steps", m.steps},
                {"diagonal_minimum_rows", m.diagonal_minimum_rows()},
                {"per_seed", m.per_seed}});
}

void audit_sweep(const RunConfig& config, const Environment& env) {
  const auto agents =
      load_audit_agents(config, {config.resolved_audit_step()});
  const auto result = plan_sweep(agents, env, config);
  CsvTable table({"model", "prior", "budget", "mean_return", "stderr", "seeds"});
  for (const auto& c : result.cells) {
    const auto st = c.summary();
    table.add_row({model_name(c.model), prior_name(c.prior),
                   CsvTable::cell(c.budget), CsvTable::cell(st.mean),
                   CsvTable::cell(st.sem), CsvTable::cell(st.count)});
  }
  const auto base = summarize(result.baseline_per_seed);
  table.add_row({"none", "policy_prior_only", "0", CsvTable::cell(base.mean),
                 CsvTable::cell(base.sem), CsvTable::cell(base.count)});
  write_report(reports_directory(config), "sweep", table, config,
               {{"step", config.resolved_audit_step()},
                {"rollout_horizon", config.sweep_rollout_horizon},
                {"baseline", stats_json(base)}});
}

void audit_prior(const RunConfig& config, const Environment& env) {
  const auto agents = load_audit_agents(config, config.resolved_audit_steps());
  const auto diag = prior_diagnostics(agents, env, config);
  CsvTable table({"step", "prior", "tv_mean", "tv_stderr", "kl_mean",
                  "kl_stderr", "error_mean", "error_stderr", "seeds"});
  for (const auto& r : diag.rows) {
    const auto tv = summarize(r.tv), kl = summarize(r.kl),
               err = summarize(r.error);
    table.add_row({CsvTable::cell(r.step), prior_name(r.prior),
                   CsvTable::cell(tv.mean), CsvTable::cell(tv.sem),
                   CsvTable::cell(kl.mean), CsvTable::cell(kl.sem),
                   CsvTable::cell(err.mean), CsvTable::cell(err.sem),
                   CsvTable::cell(tv.count)});
  }
  write_report(reports_directory(config), "prior", table, config,
               {{"budget", config.prior_budget},
                {"error_mode", config.prior_error_mode}});
}

// Guards that need the environment but must fail before any output.
void check_audit_config(const std::string& kind, const RunConfig& config,
                        const Environment& env) {
  if (kind == "rank") {
    const auto n = sequence_count(env.spec().action_count,
                                  static_cast<int>(config.rank_horizon));
    if (n < 0 || n > config.rank_enumeration_cap) {
      throw ConfigError(
          "rank_horizon",
          "invalid value for 'rank_horizon': " +
              std::to_string(env.spec().action_count) + "^" +
              std::to_string(config.rank_horizon) +
              " action sequences exceed rank_enumeration_cap (" +
              std::to_string(config.rank_enumeration_cap) + ")");
    }
  }
}

int cmd_audit(const std::string& kind, const RunConfig& config,
              std::ostream& out) {
  const auto env = make_environment(config);
  check_audit_config(kind, config, *env);
  if (kind == "horizon") audit_horizon(config, *env);
  if (kind == "rank") audit_rank(config, *env);
  if (kind == "cross") audit_cross(config, *env);
  if (kind == "sweep") audit_sweep(config, *env);
  if (kind == "prior") audit_prior(config, *env);
  out << "audit " << kind << " written to "
      << reports_directory(config).string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"MuZero model audits: training and value-prediction audits"};
  app.name(args.empty() ? "muzero-audit" : args[0]);
  app.require_subcommand(1);

  std::string config_file;
  std::map<std::string, std::string> flags;
  app.add_option("--config", config_file,
                 "Config file (key = value lines or JSON)");
  for (const auto& key : RunConfig::keys()) {
    app.add_option_function<std::string>(
           "--" + key, [&flags, key](const std::string& v) { flags[key] = v; },
           RunConfig::describe(key))
        ->type_name("VALUE");
  }
  auto* train = app.add_subcommand("train", "Self-play training");
  train->fallthrough();
  auto* audit = app.add_subcommand("audit", "Run an audit over checkpoints");
  audit->fallthrough();
  audit->require_subcommand(1);
  std::vector<CLI::App*> audits;
  for (const char* kind : kAuditKinds) {
    auto* sub = audit->add_subcommand(kind, std::string("Audit: ") + kind);
    sub->fallthrough();
    audits.push_back(sub);
  }
  auto* show = app.add_subcommand("config", "Print the resolved config");
  show->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const RunConfig config = resolve_config(config_file, flags);
    if (*show) {
      out << config.to_text();
      return kOk;
    }
    if (*train) return cmd_train(config, out);
    for (auto* sub : audits) {
      if (*sub) return cmd_audit(sub->get_name(), config, out);
    }
    err << "error: no command\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error";
    if (!e.key().empty()) err << " [" << e.key() << "]";
    err << ": " << e.what() << "\n";
    return kConfigError;
  } catch (const MissingArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace mza::cli
