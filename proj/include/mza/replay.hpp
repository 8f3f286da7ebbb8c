#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include "mza/rng.hpp"
#include "mza/trajectory.hpp"

namespace mza {

// Binary sum tree over a fixed number of leaves.
class SumTree {
 public:
  explicit SumTree(std::size_t leaves);

  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return nodes_[base_ + leaf]; }
  double total() const { return nodes_[1]; }
  // Leaf whose cumulative interval contains mass in [0, total()).
  std::size_t find(double mass) const;
  std::size_t leaves() const { return leaves_; }

 private:
  std::size_t leaves_;
  std::size_t base_;
  std::vector<double> nodes_;
};

// Ring of trajectories with proportional prioritized sampling over every
// stored position: P(i) = p_i^alpha / sum_j p_j^alpha. Sampling is two-level
// (trajectory by its summed mass, then position within it), which is the
// same distribution as flat sampling. All members lock internally, so actors
// may append while the learner samples.
class ReplayBuffer {
 public:
  struct Sample {
    std::size_t slot = 0;
    std::size_t position = 0;
    double probability = 0.0;
    // (N * P(i))^-beta, normalized by the batch maximum.
    double weight = 1.0;
  };

  ReplayBuffer(std::size_t capacity, double alpha, double beta = 1.0);

  // Stores the trajectory with one priority per position, evicting the
  // oldest trajectory when full. Returns the slot used.
  std::size_t add(Trajectory trajectory, std::vector<double> priorities);

  std::vector<Sample> sample(std::size_t batch_size, Rng& rng) const;

  // Sets p_i = |error_i| for each sampled position.
  void update_priorities(std::span<const Sample> samples,
                         std::span<const double> errors);

  double probability(std::size_t slot, std::size_t position) const;
  double priority(std::size_t slot, std::size_t position) const;
  const Trajectory& trajectory(std::size_t slot) const;

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::size_t total_positions() const;
  double alpha() const { return alpha_; }

 private:
  struct Slot {
    Trajectory trajectory;
    std::vector<double> priorities;
    std::vector<double> masses;  // priority^alpha
  };

  double mass_of(double priority) const;
  void refresh_slot(std::size_t slot);

  std::size_t capacity_;
  double alpha_;
  double beta_;
  std::vector<Slot> slots_;
  std::size_t next_ = 0;
  std::size_t count_ = 0;
  std::size_t positions_ = 0;
  SumTree tree_;
  mutable std::mutex mutex_;
};

}  // namespace mza
