#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mza/model.hpp"
#include "mza/rng.hpp"

namespace mza {

enum class PriorMode { kLearned, kUniform };
enum class ModelBackend { kLearned, kGroundTruth };
enum class LeafEval { kValueNet, kRollout };

struct SearchConfig {
  int num_simulations = 50;
  double pb_c_init = 1.25;
  double pb_c_base = 19652.0;
  double discount = 0.997;
  // Eq. for acting: N^(1/T). T <= 0 selects the most visited action.
  double temperature = 1.0;
  double dirichlet_alpha = 0.25;
  double dirichlet_fraction = 0.25;
  bool add_root_noise = false;
  PriorMode prior_mode = PriorMode::kLearned;
  ModelBackend model_backend = ModelBackend::kLearned;
  LeafEval leaf_eval = LeafEval::kValueNet;
  // Length of the uniform-random rollout when leaf_eval is kRollout.
  int rollout_horizon = 16;
  bool record_trajectories = false;
};

// Running range of backed-up values used to rescale Q into [0, 1].
class MinMaxStats {
 public:
  void update(double v);
  // Clamped to [0, 1]; returns 0 until a positive spread has been seen.
  double normalize(double v) const;
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

struct SearchNode {
  double prior = 0.0;
  int visit_count = 0;
  double value_sum = 0.0;
  // Reward on the edge from the parent into this node.
  double reward = 0.0;
  ModelState state;
  bool has_state = false;
  bool terminal = false;
  // Indexed by action; empty until the node is expanded.
  std::vector<SearchNode> children;

  bool expanded() const { return !children.empty(); }
  double q() const { return visit_count > 0 ? value_sum / visit_count : 0.0; }
};

struct SimulatedTrajectory {
  std::vector<Action> actions;
  // Model rewards on each edge of the root-to-leaf path.
  std::vector<double> rewards;
};

struct SearchResult {
  std::vector<int> visit_counts;
  double root_value = 0.0;
  std::vector<double> action_distribution;
  std::vector<double> empirical_visit_distribution;
  // Prior at the root before any Dirichlet noise.
  std::vector<double> root_prior;
  std::vector<SimulatedTrajectory> simulated_trajectories;
};

// pUCT: argmax_a Qbar(a) + c * P(a) * sqrt(N(node)) / (1 + N(a)) with
// c = c1 + log((N(node) + c2 + 1) / c2). N(node) counts every simulation
// that passed through the node (the root starts at zero). Unvisited children
// take Q = 0, normalized like any other value. Ties go to the lowest index.
Action select_child(const SearchNode& node, const MinMaxStats& stats,
                    const SearchConfig& config);

double exploration_constant(int parent_visits, const SearchConfig& config);

// Runs config.num_simulations simulations from `root`. The root is expanded
// before the first simulation without being counted as a visit, so
// sum(visit_counts) == num_simulations. Throws on a terminal root.
SearchResult run_search(const SearchModel& model, const EnvState& root,
                        const SearchConfig& config, Rng& rng);

// Builds the model named by config.model_backend. `network` is required for
// the learned backend and supplies the prior/value for the ground-truth
// backend.
std::unique_ptr<SearchModel> make_search_model(const SearchConfig& config,
                                               const Network* network,
                                               const Environment& env);

// pi(a) = N(a)^(1/T) / sum_b N(b)^(1/T); T <= 0 is the argmax limit.
std::vector<double> action_distribution(std::span<const int> visit_counts,
                                        double temperature);

// (1 + N(a)) / (|A| + sum_b N(b))
std::vector<double> empirical_visit_distribution(
    std::span<const int> visit_counts, int action_count);

// (1 - fraction) * p + fraction * Dirichlet(alpha)
std::vector<double> add_root_noise(std::span<const double> priors,
                                   double alpha, double fraction, Rng& rng);

// Samples from an action distribution; T <= 0 takes the argmax.
Action choose_action(std::span<const double> distribution, double temperature,
                     Rng& rng);

std::string to_string(PriorMode mode);
std::string to_string(ModelBackend backend);
std::string to_string(LeafEval leaf);

}  // namespace mza
