#include "mza/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mza {

void MinMaxStats::update(double v) {
  min_ = std::min(min_, v);
  max_ = std::max(max_, v);
}

double MinMaxStats::normalize(double v) const {
  if (!(max_ > min_)) return 0.0;
  return std::clamp((v - min_) / (max_ - min_), 0.0, 1.0);
}

double exploration_constant(int parent_visits, const SearchConfig& config) {
  return config.pb_c_init +
         std::log((parent_visits + config.pb_c_base + 1.0) / config.pb_c_base);
}

Action select_child(const SearchNode& node, const MinMaxStats& stats,
                    const SearchConfig& config) {
  if (!node.expanded()) throw std::logic_error("select_child on a leaf");
  const double c = exploration_constant(node.visit_count, config);
  const double sqrt_parent = std::sqrt(static_cast<double>(node.visit_count));
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < node.children.size(); ++a) {
    const SearchNode& child = node.children[a];
    // Unvisited children count as Q = 0 before normalization.
    const double q = stats.normalize(
        child.visit_count > 0 ? child.reward + config.discount * child.q()
                              : 0.0);
    const double u = c * child.prior * sqrt_parent / (1.0 + child.visit_count);
    const double score = q + u;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(a);
    }
  }
  return Action{best};
}

namespace {

void expand(SearchNode& node, std::span<const double> priors) {
  node.children.resize(priors.size());
  for (std::size_t a = 0; a < priors.size(); ++a) {
    node.children[a].prior = priors[a];
  }
}

double rollout(const SearchModel& model, const ModelState& start,
               const SearchConfig& config, Rng& rng) {
  double value = 0.0;
  double scale = 1.0;
  ModelState state = start;
  const int n = model.action_count();
  for (int k = 0; k < config.rollout_horizon; ++k) {
    auto step = model.advance(state, Action{uniform_int(rng, n)});
    value += scale * step.reward;
    scale *= config.discount;
    if (step.terminal) break;
    state = std::move(step.next);
  }
  return value;
}

}  // namespace

SearchResult run_search(const SearchModel& model, const EnvState& root_state,
                        const SearchConfig& config, Rng& rng) {
  if (root_state.terminal) {
    throw std::invalid_argument("search root must be non-terminal");
  }
  if (config.num_simulations < 1) {
    throw std::invalid_argument("num_simulations must be >= 1");
  }
  const int n = model.action_count();
  const std::vector<double> uniform_prior(n, 1.0 / n);
  const bool need_eval = config.prior_mode == PriorMode::kLearned ||
                         config.leaf_eval == LeafEval::kValueNet;

  SearchResult result;
  SearchNode root;
  root.state = model.encode(root_state);
  root.has_state = true;
  {
    std::vector<double> priors = uniform_prior;
    if (config.prior_mode == PriorMode::kLearned) {
      priors = model.evaluate(root.state).policy;
    }
    result.root_prior = priors;
    if (config.add_root_noise) {
      priors = add_root_noise(priors, config.dirichlet_alpha,
                              config.dirichlet_fraction, rng);
    }
    expand(root, priors);
  }

  MinMaxStats stats;
  std::vector<SearchNode*> path;
  for (int sim = 0; sim < config.num_simulations; ++sim) {
    SimulatedTrajectory trajectory;
    path.assign(1, &root);
    SearchNode* node = &root;
    while (node->expanded()) {
      const Action a = select_child(*node, stats, config);
      node = &node->children[a.index];
      path.push_back(node);
      trajectory.actions.push_back(a);
    }

    SearchNode* parent = path[path.size() - 2];
    if (!node->has_state) {
      auto step = model.advance(parent->state, trajectory.actions.back());
      node->state = std::move(step.next);
      node->reward = step.reward;
      node->terminal = step.terminal;
      node->has_state = true;
    }

    double value = 0.0;
    if (!node->terminal) {
      Evaluation eval;
      if (need_eval) eval = model.evaluate(node->state);
      value = config.leaf_eval == LeafEval::kValueNet
                  ? eval.value
                  : rollout(model, node->state, config, rng);
      expand(*node, config.prior_mode == PriorMode::kLearned
                        ? std::span<const double>(eval.policy)
                        : std::span<const double>(uniform_prior));
    }

    if (config.record_trajectories) {
      for (std::size_t i = 1; i < path.size(); ++i) {
        trajectory.rewards.push_back(path[i]->reward);
      }
      result.simulated_trajectories.push_back(std::move(trajectory));
    }

    for (std::size_t i = path.size(); i-- > 0;) {
      SearchNode* p = path[i];
      p->value_sum += value;
      ++p->visit_count;
      if (i > 0) stats.update(p->reward + config.discount * p->q());
      value = p->reward + config.discount * value;
    }
  }

  result.visit_counts.resize(n);
  for (int a = 0; a < n; ++a) {
    result.visit_counts[a] = root.children[a].visit_count;
  }
  result.root_value = root.q();
  result.action_distribution =
      action_distribution(result.visit_counts, config.temperature);
  result.empirical_visit_distribution =
      empirical_visit_distribution(result.visit_counts, n);
  return result;
}

std::unique_ptr<SearchModel> make_search_model(const SearchConfig& config,
                                               const Network* network,
                                               const Environment& env) {
  if (config.model_backend == ModelBackend::kGroundTruth) {
    return std::make_unique<EnvironmentModel>(env, network);
  }
  if (network == nullptr) {
    throw std::invalid_argument("learned backend needs a network");
  }
  return std::make_unique<LearnedModel>(*network);
}

std::vector<double> action_distribution(std::span<const int> visit_counts,
                                        double temperature) {
  const long total = std::accumulate(visit_counts.begin(), visit_counts.end(),
                                     0L);
  if (total <= 0) throw std::invalid_argument("all visit counts are zero");
  std::vector<double> out(visit_counts.size(), 0.0);
  if (temperature <= 0.0) {
    const auto best = std::max_element(visit_counts.begin(),
                                       visit_counts.end()) -
                      visit_counts.begin();
    out[best] = 1.0;
    return out;
  }
  // Scale by the max count first so large counts with small T stay finite.
  const double mx = *std::max_element(visit_counts.begin(), visit_counts.end());
  double z = 0.0;
  for (std::size_t a = 0; a < visit_counts.size(); ++a) {
    out[a] = std::pow(visit_counts[a] / mx, 1.0 / temperature);
    z += out[a];
  }
  for (auto& v : out) v /= z;
  return out;
}

std::vector<double> empirical_visit_distribution(
    std::span<const int> visit_counts, int action_count) {
  const double total = std::accumulate(visit_counts.begin(),
                                       visit_counts.end(), 0.0);
  std::vector<double> out(action_count);
  for (int a = 0; a < action_count; ++a) {
    const double n = a < static_cast<int>(visit_counts.size())
                         ? visit_counts[a]
                         : 0.0;
    out[a] = (1.0 + n) / (action_count + total);
  }
  return out;
}

std::vector<double> add_root_noise(std::span<const double> priors,
                                   double alpha, double fraction, Rng& rng) {
  const auto noise =
      sample_dirichlet(alpha, static_cast<int>(priors.size()), rng);
  std::vector<double> out(priors.size());
  for (std::size_t a = 0; a < priors.size(); ++a) {
    out[a] = (1.0 - fraction) * priors[a] + fraction * noise[a];
  }
  return out;
}

Action choose_action(std::span<const double> distribution, double temperature,
                     Rng& rng) {
  if (temperature <= 0.0) {
    return Action{static_cast<int>(
        std::max_element(distribution.begin(), distribution.end()) -
        distribution.begin())};
  }
  return Action{sample_categorical(distribution, rng)};
}

std::string to_string(PriorMode mode) {
  return mode == PriorMode::kLearned ? "policy" : "uniform";
}

std::string to_string(ModelBackend backend) {
  return backend == ModelBackend::kLearned ? "learned" : "ground_truth";
}

std::string to_string(LeafEval leaf) {
  return leaf == LeafEval::kValueNet ? "value_net" : "rollout";
}

}  // namespace mza
