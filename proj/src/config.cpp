#include "mza/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mza {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::int64_t parse_int(const std::string& text) {
  const auto t = trim(text);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("expected an integer, got '" + text + "'");
  }
  return v;
}

double parse_double(const std::string& text) {
  const auto t = trim(text);
  double v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty() ||
      !std::isfinite(v)) {
    throw std::invalid_argument("expected a number, got '" + text + "'");
  }
  return v;
}

struct Entry {
  std::string doc;
  bool affects_results = true;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Entry field(T RunConfig::*member, std::string doc, bool affects = true) {
  Entry e;
  e.doc = std::move(doc);
  e.affects_results = affects;
  e.set = [member](RunConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, std::int64_t>) {
      c.*member = parse_int(v);
    } else if constexpr (std::is_same_v<T, double>) {
      c.*member = parse_double(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      c.*member = trim(v);
    } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
      c.*member = parse_int_list(v);
    } else if constexpr (std::is_same_v<T, TemperatureSchedule>) {
      c.*member = TemperatureSchedule::parse(v);
    }
  };
  e.get = [member](const RunConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, std::int64_t>) {
      return std::to_string(c.*member);
    } else if constexpr (std::is_same_v<T, double>) {
      return format_double(c.*member);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return c.*member;
    } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
      return format_int_list(c.*member);
    } else if constexpr (std::is_same_v<T, TemperatureSchedule>) {
      return (c.*member).to_string();
    }
  };
  return e;
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> entries = [] {
    using C = RunConfig;
    std::map<std::string, Entry> m;
    m["random_seeds"] = field(&C::random_seeds, "training seeds, e.g. 0..29");
    m["discount_factor"] = field(&C::discount_factor, "gamma");
    m["total_training_steps"] =
        field(&C::total_training_steps, "optimizer steps per seed");
    m["optimizer"] = field(&C::optimizer, "only 'adam'");
    m["initial_learning_rate"] = field(&C::initial_learning_rate, "lr0");
    m["learning_rate_decay_rate"] =
        field(&C::learning_rate_decay_rate, "lr = lr0 * rate^(t/steps)");
    m["learning_rate_decay_steps"] =
        field(&C::learning_rate_decay_steps, "0 disables decay");
    m["weight_decay"] = field(&C::weight_decay, "decoupled weight decay");
    m["momentum"] = field(&C::momentum, "Adam beta1");
    m["batch_size"] = field(&C::batch_size, "positions per optimizer step");
    m["encoding_size"] = field(&C::encoding_size, "latent width");
    m["fully_connected_layer_size"] =
        field(&C::fully_connected_layer_size, "hidden width of every MLP");
    m["root_dirichlet_alpha"] = field(&C::root_dirichlet_alpha, "");
    m["root_dirichlet_fraction"] = field(&C::root_dirichlet_fraction, "");
    m["prioritized_experience_replay_alpha"] =
        field(&C::prioritized_experience_replay_alpha, "priority exponent");
    m["num_unroll_steps"] = field(&C::num_unroll_steps, "K");
    m["td_steps"] = field(&C::td_steps, "n for value targets");
    m["support_size"] = field(&C::support_size, "atoms -s..s");
    m["value_loss_weight"] = field(&C::value_loss_weight, "");
    m["replay_buffer_size"] =
        field(&C::replay_buffer_size, "trajectories kept");
    m["visit_softmax_temperature_fn"] = field(
        &C::visit_softmax_temperature_fn, "T0,step:T1,step:T2 breakpoints");

    m["environment"] = field(&C::environment, "cartpole | chain");
    m["max_episode_steps"] = field(&C::max_episode_steps, "episode cap");
    m["num_simulations"] = field(&C::num_simulations, "MCTS budget");
    m["pb_c_init"] = field(&C::pb_c_init, "c1");
    m["pb_c_base"] = field(&C::pb_c_base, "c2");
    m["adam_beta2"] = field(&C::adam_beta2, "");
    m["adam_epsilon"] = field(&C::adam_epsilon, "");
    m["per_beta"] = field(&C::per_beta, "importance-weight exponent");
    m["dynamics_gradient_scale"] =
        field(&C::dynamics_gradient_scale, "gradient factor at g inputs");
    m["initial_episodes"] =
        field(&C::initial_episodes, "self-play episodes before training");
    m["episodes_per_loop"] = field(&C::episodes_per_loop, "");
    m["training_steps_per_loop"] =
        field(&C::training_steps_per_loop, "optimizer steps per loop");
    m["checkpoint_steps"] =
        field(&C::checkpoint_steps, "empty: 6 evenly spaced steps");
    m["eval_episodes"] =
        field(&C::eval_episodes, "episodes per learning-curve point");
    m["num_actors"] =
        field(&C::num_actors, "parallel self-play episodes per loop");

    m["output_dir"] = field(&C::output_dir, "", false);
    m["run_id"] = field(&C::run_id, "", false);
    m["jobs"] = field(&C::jobs, "parallel audit workers", false);

    m["audit_checkpoint_steps"] =
        field(&C::audit_checkpoint_steps, "empty: checkpoint grid");
    m["audit_state_episodes"] =
        field(&C::audit_state_episodes, "episodes sampled for states");
    m["audit_states_per_checkpoint"] =
        field(&C::audit_states_per_checkpoint, "");
    m["audit_mc_samples"] = field(&C::audit_mc_samples, "M");
    m["audit_horizons"] = field(&C::audit_horizons, "");
    m["rank_horizon"] = field(&C::rank_horizon, "");
    m["rank_enumeration_cap"] = field(&C::rank_enumeration_cap, "");
    m["rank_states"] = field(&C::rank_states, "");
    m["cross_horizon"] = field(&C::cross_horizon, "");
    m["sweep_budgets"] = field(&C::sweep_budgets, "");
    m["sweep_rollout_horizon"] = field(&C::sweep_rollout_horizon, "");
    m["sweep_episodes"] = field(&C::sweep_episodes, "");
    m["prior_budget"] = field(&C::prior_budget, "");
    m["prior_states"] = field(&C::prior_states, "");
    m["prior_error_mode"] =
        field(&C::prior_error_mode, "trajectory_sum | per_step");
    m["audit_step"] =
        field(&C::audit_step, "checkpoint for rank and sweep; -1 = last");
    return m;
  }();
  return entries;
}

const Entry& entry(const std::string& key) {
  const auto& r = registry();
  auto it = r.find(key);
  if (it == r.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  return it->second;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

double TemperatureSchedule::at(std::int64_t step) const {
  double t = initial;
  for (const auto& [at_step, value] : breakpoints) {
    if (step >= at_step) t = value;
  }
  return t;
}

double TemperatureSchedule::final_value() const {
  return breakpoints.empty() ? initial : breakpoints.back().second;
}

TemperatureSchedule TemperatureSchedule::parse(const std::string& text) {
  TemperatureSchedule s;
  const auto parts = split(text, ',');
  s.initial = parse_double(parts.at(0));
  std::int64_t last = -1;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto kv = split(parts[i], ':');
    if (kv.size() != 2) {
      throw std::invalid_argument("temperature breakpoint must be step:value");
    }
    const auto step = parse_int(kv[0]);
    if (step <= last) {
      throw std::invalid_argument("temperature breakpoints must increase");
    }
    last = step;
    s.breakpoints.emplace_back(step, parse_double(kv[1]));
  }
  return s;
}

std::string TemperatureSchedule::to_string() const {
  std::string out = format_double(initial);
  for (const auto& [step, value] : breakpoints) {
    out += "," + std::to_string(step) + ":" + format_double(value);
  }
  return out;
}

RunConfig::RunConfig() {
  for (std::int64_t s = 0; s < 30; ++s) random_seeds.push_back(s);
  visit_softmax_temperature_fn = TemperatureSchedule::parse(
      "1.0,50000:0.5,75000:0.25");
  for (std::int64_t h = 1; h <= 10; ++h) audit_horizons.push_back(h);
  sweep_budgets = {1, 4, 16, 64};
}

std::vector<std::int64_t> RunConfig::resolved_checkpoint_steps() const {
  if (!checkpoint_steps.empty()) return checkpoint_steps;
  std::vector<std::int64_t> steps;
  for (int i = 0; i < 6; ++i) {
    const auto s = total_training_steps * i / 5;
    if (steps.empty() || steps.back() != s) steps.push_back(s);
  }
  return steps;
}

std::vector<std::int64_t> RunConfig::resolved_audit_steps() const {
  return audit_checkpoint_steps.empty() ? resolved_checkpoint_steps()
                                        : audit_checkpoint_steps;
}

std::int64_t RunConfig::resolved_audit_step() const {
  return audit_step >= 0 ? audit_step : resolved_checkpoint_steps().back();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const Entry& e = entry(key);
  try {
    e.set(*this, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(key, "invalid value for '" + key + "': " + ex.what());
  }
}

std::string RunConfig::get(const std::string& key) const {
  return entry(key).get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, e] : registry()) out.push_back(name);
    return out;
  }();
  return k;
}

std::string RunConfig::describe(const std::string& key) {
  return entry(key).doc;
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, e] : registry()) out[name] = e.get(*this);
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [name, value] : to_map()) {
    out += name + " = " + value + "\n";
  }
  return out;
}

std::uint64_t RunConfig::digest() const {
  std::string canonical;
  for (const auto& [name, e] : registry()) {
    if (!e.affects_results) continue;
    canonical += name + "=" + e.get(*this) + "\n";
  }
  return fnv1a(canonical);
}

std::string RunConfig::digest_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(digest()));
  return buf;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError(key, "invalid value for '" + key + "': " + why);
  };
  if (random_seeds.empty()) fail("random_seeds", "need at least one seed");
  if (!(discount_factor >= 0.0 && discount_factor < 1.0)) {
    fail("discount_factor", "must lie in [0, 1)");
  }
  if (total_training_steps < 0) fail("total_training_steps", "negative");
  if (optimizer != "adam") fail("optimizer", "only 'adam' is supported");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (encoding_size < 2) fail("encoding_size", "must be >= 2");
  if (fully_connected_layer_size < 1) {
    fail("fully_connected_layer_size", "must be >= 1");
  }
  if (num_unroll_steps < 0) fail("num_unroll_steps", "negative");
  if (td_steps < 1) fail("td_steps", "must be >= 1");
  if (support_size < 1) fail("support_size", "must be >= 1");
  if (replay_buffer_size < 1) fail("replay_buffer_size", "must be >= 1");
  if (environment != "cartpole" && environment != "chain") {
    fail("environment", "expected cartpole or chain");
  }
  if (max_episode_steps < 1) fail("max_episode_steps", "must be >= 1");
  if (num_simulations < 1) fail("num_simulations", "must be >= 1");
  if (root_dirichlet_fraction < 0.0 || root_dirichlet_fraction > 1.0) {
    fail("root_dirichlet_fraction", "must lie in [0, 1]");
  }
  if (root_dirichlet_alpha <= 0.0) fail("root_dirichlet_alpha", "must be > 0");
  if (prioritized_experience_replay_alpha < 0.0) {
    fail("prioritized_experience_replay_alpha", "negative");
  }
  if (episodes_per_loop < 1) fail("episodes_per_loop", "must be >= 1");
  if (training_steps_per_loop < 1) {
    fail("training_steps_per_loop", "must be >= 1");
  }
  if (num_actors < 1) fail("num_actors", "must be >= 1");
  if (jobs < 1) fail("jobs", "must be >= 1");
  for (auto s : checkpoint_steps) {
    if (s < 0 || s > total_training_steps) {
      fail("checkpoint_steps", "steps must lie in [0, total_training_steps]");
    }
  }
  if (!std::is_sorted(checkpoint_steps.begin(), checkpoint_steps.end())) {
    fail("checkpoint_steps", "must be increasing");
  }
  for (auto h : audit_horizons) {
    if (h < 0) fail("audit_horizons", "negative horizon");
  }
  if (audit_mc_samples < 1) fail("audit_mc_samples", "must be >= 1");
  if (rank_horizon < 1) fail("rank_horizon", "must be >= 1");
  if (cross_horizon < 1) fail("cross_horizon", "must be >= 1");
  if (sweep_budgets.empty()) fail("sweep_budgets", "need at least one budget");
  for (std::size_t i = 0; i < sweep_budgets.size(); ++i) {
    if (sweep_budgets[i] < 1 || (i > 0 && sweep_budgets[i] <= sweep_budgets[i - 1])) {
      fail("sweep_budgets", "budgets must be >= 1 and strictly increasing");
    }
  }
  if (prior_error_mode != "trajectory_sum" && prior_error_mode != "per_step") {
    fail("prior_error_mode", "expected trajectory_sum or per_step");
  }
}

RunConfig load_config_text(const std::string& text) {
  RunConfig config;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError("", std::string("malformed JSON config: ") + e.what());
    }
    const auto& obj = j.contains("config") ? j.at("config") : j;
    if (!obj.is_object()) throw ConfigError("", "JSON config must be an object");
    for (const auto& [key, value] : obj.items()) {
      config.set(key, value.is_string() ? value.get<std::string>()
                                        : value.dump());
    }
    return config;
  }
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) +
                                ": expected 'key = value'");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("", "cannot read config file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str());
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) {
    if (auto dots = part.find(".."); dots != std::string::npos) {
      const auto lo = parse_int(part.substr(0, dots));
      const auto hi = parse_int(part.substr(dots + 2));
      if (hi < lo) throw std::invalid_argument("empty range '" + part + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_int(part));
    }
  }
  return out;
}

std::string format_int_list(const std::vector<std::int64_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace mza
