#pragma once

#include <span>
#include <vector>

namespace mza {

double mean(std::span<const double> values);
// Sample standard deviation over sqrt(n); 0 for fewer than two values.
double standard_error(std::span<const double> values);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);
// 1-based ranks, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// TV[p, q] = 0.5 * sum |p - q|.
double total_variation(std::span<const double> p, std::span<const double> q);
// KL[p, q] = sum p log(p / q), with 0 log 0 = 0. Requires q > 0 where p > 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct MeanStderr {
  double mean = 0.0;
  double sem = 0.0;  // standard error of the mean
  int count = 0;
};
MeanStderr summarize(std::span<const double> values);

}  // namespace mza
