#include "mza/kernels.hpp"

namespace mza::kernels {

void affine(const double* x, std::int64_t rows, std::int64_t in,
            const double* w, const double* b, std::int64_t out, double* y) {
  for (std::int64_t r = 0; r < rows; ++r) {
    double* yr = y + r * out;
    for (std::int64_t j = 0; j < out; ++j) yr[j] = b[j];
    const double* xr = x + r * in;
    for (std::int64_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      const double* wi = w + i * out;
      for (std::int64_t j = 0; j < out; ++j) yr[j] += xi * wi[j];
    }
  }
}

void minmax_row(const double* x, std::int64_t n, double* y,
                std::int64_t* argmin, std::int64_t* argmax, double* scale) {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  for (std::int64_t i = 1; i < n; ++i) {
    if (x[i] < x[lo]) lo = i;
    if (x[i] > x[hi]) hi = i;
  }
  double s = x[hi] - x[lo];
  if (s < 1e-5) s += 1e-5;
  for (std::int64_t i = 0; i < n; ++i) y[i] = (x[i] - x[lo]) / s;
  if (argmin) *argmin = lo;
  if (argmax) *argmax = hi;
  if (scale) *scale = s;
}

}  // namespace mza::kernels
