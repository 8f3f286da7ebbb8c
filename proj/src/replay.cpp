#include "mza/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mza {

SumTree::SumTree(std::size_t leaves) : leaves_(leaves) {
  base_ = 1;
  while (base_ < leaves) base_ <<= 1;
  nodes_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double value) {
  std::size_t i = base_ + leaf;
  nodes_[i] = value;
  for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

std::size_t SumTree::find(double mass) const {
  std::size_t i = 1;
  while (i < base_) {
    const double left = nodes_[2 * i];
    if (mass < left || nodes_[2 * i + 1] <= 0.0) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  return std::min(i - base_, leaves_ - 1);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha, double beta)
    : capacity_(capacity),
      alpha_(alpha),
      beta_(beta),
      slots_(capacity),
      tree_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity is zero");
}

double ReplayBuffer::mass_of(double priority) const {
  if (priority <= 0.0) return alpha_ == 0.0 ? 1.0 : 0.0;
  return std::pow(priority, alpha_);
}

void ReplayBuffer::refresh_slot(std::size_t slot) {
  const auto& m = slots_[slot].masses;
  tree_.set(slot, std::accumulate(m.begin(), m.end(), 0.0));
}

std::size_t ReplayBuffer::add(Trajectory trajectory,
                              std::vector<double> priorities) {
  if (priorities.size() != trajectory.length()) {
    throw std::invalid_argument("one priority per position required");
  }
  std::lock_guard lock(mutex_);
  const std::size_t slot = next_;
  Slot& s = slots_[slot];
  positions_ -= s.priorities.size();
  s.trajectory = std::move(trajectory);
  s.priorities = std::move(priorities);
  s.masses.resize(s.priorities.size());
  for (std::size_t i = 0; i < s.priorities.size(); ++i) {
    s.priorities[i] = std::abs(s.priorities[i]);
    s.masses[i] = mass_of(s.priorities[i]);
  }
  positions_ += s.priorities.size();
  refresh_slot(slot);
  next_ = (next_ + 1) % capacity_;
  count_ = std::min(count_ + 1, capacity_);
  return slot;
}

std::vector<ReplayBuffer::Sample> ReplayBuffer::sample(std::size_t batch_size,
                                                       Rng& rng) const {
  std::lock_guard lock(mutex_);
  const double total = tree_.total();
  if (!(total > 0.0)) throw std::logic_error("replay buffer has no mass");
  std::vector<Sample> out(batch_size);
  double max_weight = 0.0;
  for (auto& s : out) {
    s.slot = tree_.find(uniform01(rng) * total);
    const auto& masses = slots_[s.slot].masses;
    s.position = static_cast<std::size_t>(sample_categorical(masses, rng));
    s.probability = masses[s.position] / total;
    s.weight = std::pow(static_cast<double>(positions_) * s.probability, -beta_);
    max_weight = std::max(max_weight, s.weight);
  }
  for (auto& s : out) s.weight /= max_weight;
  return out;
}

void ReplayBuffer::update_priorities(std::span<const Sample> samples,
                                     std::span<const double> errors) {
  if (samples.size() != errors.size()) {
    throw std::invalid_argument("one error per sample required");
  }
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Slot& s = slots_.at(samples[i].slot);
    s.priorities.at(samples[i].position) = std::abs(errors[i]);
    s.masses[samples[i].position] = mass_of(std::abs(errors[i]));
  }
  for (const auto& sample : samples) refresh_slot(sample.slot);
}

double ReplayBuffer::probability(std::size_t slot, std::size_t position) const {
  std::lock_guard lock(mutex_);
  const double total = tree_.total();
  return total > 0.0 ? slots_.at(slot).masses.at(position) / total : 0.0;
}

double ReplayBuffer::priority(std::size_t slot, std::size_t position) const {
  std::lock_guard lock(mutex_);
  return slots_.at(slot).priorities.at(position);
}

const Trajectory& ReplayBuffer::trajectory(std::size_t slot) const {
  std::lock_guard lock(mutex_);
  return slots_.at(slot).trajectory;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mutex_);
  return count_;
}

std::size_t ReplayBuffer::total_positions() const {
  std::lock_guard lock(mutex_);
  return positions_;
}

}  // namespace mza
