#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mza {

// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);
  Tensor(std::vector<std::int64_t> shape, std::vector<double> values);

  static Tensor matrix(std::int64_t rows, std::int64_t cols);
  static Tensor row(std::span<const double> values);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rank() const { return shape_.size(); }

  // Matrix view. A rank-1 tensor is treated as a single row.
  std::int64_t rows() const;
  std::int64_t cols() const;

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::int64_t r, std::int64_t c) { return values_[r * cols() + c]; }
  double at(std::int64_t r, std::int64_t c) const {
    return values_[r * cols() + c];
  }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> values_;
};

// Named weights for all networks. Ordered by name so iteration (and the
// checkpoint layout) is deterministic.
using ParameterSet = std::map<std::string, Tensor>;

ParameterSet zeros_like(const ParameterSet& params);
std::size_t parameter_count(const ParameterSet& params);

}  // namespace mza
