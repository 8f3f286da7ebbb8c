#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "mza/config.hpp"
#include "mza/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "muzero-audit");
  std::ostringstream out, err;
  const int code = mza::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A run small enough for a unit test.
std::vector<std::string> tiny_flags(const fs::path& dir) {
  return {"--output_dir=" + dir.string(),
          "--run_id=run",
          "--random_seeds=0,1",
          "--total_training_steps=4",
          "--training_steps_per_loop=2",
          "--checkpoint_steps=0,2,4",
          "--batch_size=4",
          "--num_simulations=3",
          "--max_episode_steps=15",
          "--eval_episodes=1",
          "--num_unroll_steps=2",
          "--td_steps=3",
          "--audit_state_episodes=1",
          "--audit_states_per_checkpoint=2",
          "--audit_mc_samples=2",
          "--audit_horizons=1,2",
          "--audit_checkpoint_steps=2,4",
          "--rank_horizon=2",
          "--rank_states=2",
          "--cross_horizon=2",
          "--sweep_budgets=1,2",
          "--sweep_episodes=1",
          "--sweep_rollout_horizon=3",
          "--prior_budget=3",
          "--prior_states=2"};
}

Outcome run_with(std::string command, const fs::path& dir,
                 std::vector<std::string> extra = {}) {
  std::vector<std::string> args;
  std::istringstream words(command);
  for (std::string w; words >> w;) args.push_back(w);
  for (auto& f : tiny_flags(dir)) args.push_back(f);
  for (auto& f : extra) args.push_back(f);
  return run_cli(args);
}

}  // namespace

TEST_CASE("config errors exit with code 2 and write nothing") {
  const auto dir = fresh_dir("mza_cli_config");
  auto r = run_cli({"train", "--config=" + (dir / "absent.cfg").string(),
                    "--output_dir=" + dir.string()});
  CHECK(r.code == mza::cli::kConfigError);
  CHECK(r.err.find("absent.cfg") != std::string::npos);
  CHECK(fs::is_empty(dir));

  r = run_cli({"train", "--batch_size=abc", "--output_dir=" + dir.string()});
  CHECK(r.code == mza::cli::kConfigError);
  CHECK(r.err.find("batch_size") != std::string::npos);
  r = run_cli({"train", "--no_such_key=1"});
  CHECK(r.code == mza::cli::kConfigError);
  r = run_cli({"train", "--discount_factor=1.5", "--output_dir=" + dir.string()});
  CHECK(r.code == mza::cli::kConfigError);
  CHECK(fs::is_empty(dir));
}

TEST_CASE("flags override the config file") {
  const auto dir = fresh_dir("mza_cli_override");
  {
    std::ofstream f(dir / "run.cfg");
    f << "batch_size = 32\ntd_steps = 7\n";
  }
  const auto r = run_cli({"config", "--config=" + (dir / "run.cfg").string(),
                          "--batch_size=16"});
  REQUIRE(r.code == 0);
  const auto echoed = mza::load_config_text(r.out);
  CHECK(echoed.batch_size == 16);
  CHECK(echoed.td_steps == 7);
}

TEST_CASE("missing checkpoints exit with code 3 naming the path") {
  const auto dir = fresh_dir("mza_cli_missing");
  const auto r = run_with("audit horizon", dir);
  CHECK(r.code == mza::cli::kMissingArtifact);
  CHECK(r.err.find("step_2.ckpt") != std::string::npos);
}

TEST_CASE("rank enumeration above the cap is refused before any work") {
  const auto dir = fresh_dir("mza_cli_rank");
  const auto r = run_with("audit rank", dir, {"--rank_horizon=13", "--rank_enumeration_cap=4096"});
  CHECK(r.code == mza::cli::kConfigError);
  CHECK(r.err.find("rank_horizon") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "run" / "reports" / "rank.csv"));
}

TEST_CASE("train and audit end to end, reproducibly") {
  const auto dir = fresh_dir("mza_cli_e2e");
  auto r = run_with("train", dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (int seed : {0, 1}) {
    for (int step : {0, 2, 4}) {
      CHECK(fs::exists(dir / "run" / "checkpoints" / ("seed_" + std::to_string(seed)) /
                       ("step_" + std::to_string(step) + ".ckpt")));
    }
  }
  const auto reports = dir / "run" / "reports";
  for (const char* kind : {"horizon", "rank", "cross", "sweep", "prior"}) {
    r = run_with(std::string("audit ") + kind, dir);
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  const std::vector<std::string> names{"learning_curve", "horizon", "rank",
                                       "cross_h2", "sweep", "prior"};
  std::map<std::string, std::string> first;
  for (const auto& n : names) {
    REQUIRE(fs::exists(reports / (n + ".csv")));
    REQUIRE(fs::exists(reports / (n + ".json")));
    first[n] = slurp(reports / (n + ".csv"));
  }
  CHECK(first["learning_curve"].rfind(
            "step,seed,policy_prior_return_mean,behavior_return_mean\n", 0) == 0);
  CHECK(first["horizon"].rfind("step,horizon,mean_error,stderr,seeds\n", 0) == 0);

  // The JSON echo of a report reproduces the run byte for byte.
  const auto echo = mza::load_config_text(slurp(reports / "horizon.json"));
  const auto dir2 = fresh_dir("mza_cli_e2e_echo");
  {
    std::ofstream f(dir2 / "echo.json");
    f << slurp(reports / "horizon.json");
  }
  const std::string cfg = "--config=" + (dir2 / "echo.json").string();
  const std::string out2 = "--output_dir=" + dir2.string();
  REQUIRE(run_cli({"train", cfg, out2}).code == 0);
  for (const char* kind : {"horizon", "rank", "cross", "sweep", "prior"}) {
    REQUIRE(run_cli({"audit", kind, cfg, out2}).code == 0);
  }
  for (const auto& n : names) {
    CHECK_MESSAGE(slurp(dir2 / "run" / "reports" / (n + ".csv")) == first[n], n);
  }
  CHECK(echo.batch_size == 4);
}
