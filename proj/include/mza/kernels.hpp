#pragma once

#include <cmath>
#include <cstdint>

// Forward kernels shared by the inference path and the recording tape, so
// both produce bit-identical values.
namespace mza::kernels {

// y[r, j] = b[j] + sum_i x[r, i] * w[i, j]; w is (in x out) row-major.
void affine(const double* x, std::int64_t rows, std::int64_t in,
            const double* w, const double* b, std::int64_t out, double* y);

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

// Per-row min-max scaling into [0, 1]. A spread below 1e-5 is widened by
// 1e-5. Reports the argmin/argmax/scale used so the tape can differentiate.
void minmax_row(const double* x, std::int64_t n, double* y,
                std::int64_t* argmin = nullptr, std::int64_t* argmax = nullptr,
                double* scale = nullptr);

}  // namespace mza::kernels
