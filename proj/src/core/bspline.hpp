#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "core/types.hpp"

namespace vsseg {

// Mirror index with whole-sample symmetry (period 2n-2): ... 2 1 | 0 1 2 | 1 0 ...
inline std::int64_t mirror_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t p = 2 * (n - 1);
  i = std::llabs(i) % p;
  return i >= n ? p - i : i;
}

// In-place cubic B-spline prefilter (Unser's recursive scheme, mirror
// boundaries). After filtering, evaluating the spline at the original grid
// points reproduces the input samples.
void cubic_prefilter_1d(double* line, std::int64_t n, std::int64_t stride);

// Separable prefilter over a 3D grid, axis by axis.
void cubic_prefilter_3d(std::vector<double>& coeffs, const Dims& dims);

// Cubic B-spline basis weights at fractional position t in [0,1) for taps
// floor(x)-1 .. floor(x)+2.
inline void cubic_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
  w[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
  w[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
  w[3] = t3 / 6.0;
}

// Evaluates the cubic spline defined by prefiltered coefficients at a
// continuous index-space point, mirroring taps that fall outside the grid.
double cubic_eval(const std::vector<double>& coeffs, const Dims& dims, double x, double y,
                  double z);

// Trilinear evaluation on raw samples (also mirror-extended).
double linear_eval(const std::vector<double>& samples, const Dims& dims, double x, double y,
                   double z);

}  // namespace vsseg
