#include "core/bspline.hpp"

#include "core/parallel.hpp"

namespace vsseg {

namespace {

constexpr double kPole = -0.26794919243112270647;  // sqrt(3) - 2
constexpr double kTol = 1e-15;

double initial_causal(const double* c, std::int64_t n, std::int64_t stride) {
  // Truncated mirror-boundary series; falls back to the exact periodic sum
  // for short lines.
  const std::int64_t horizon =
      static_cast<std::int64_t>(std::ceil(std::log(kTol) / std::log(std::abs(kPole))));
  if (horizon < n) {
    double zn = kPole;
    double sum = c[0];
    for (std::int64_t k = 1; k < horizon; ++k) {
      sum += zn * c[k * stride];
      zn *= kPole;
    }
    return sum;
  }
  double zn = kPole;
  const double iz = 1.0 / kPole;
  double z2n = std::pow(kPole, static_cast<double>(n - 1));
  double sum = c[0] + z2n * c[(n - 1) * stride];
  z2n *= z2n * iz;
  for (std::int64_t k = 1; k <= n - 2; ++k) {
    sum += (zn + z2n) * c[k * stride];
    zn *= kPole;
    z2n *= iz;
  }
  return sum / (1.0 - std::pow(kPole, static_cast<double>(2 * n - 2)));
}

double initial_anticausal(const double* c, std::int64_t n, std::int64_t stride) {
  return (kPole / (kPole * kPole - 1.0)) *
         (kPole * c[(n - 2) * stride] + c[(n - 1) * stride]);
}

}  // namespace

void cubic_prefilter_1d(double* line, std::int64_t n, std::int64_t stride) {
  if (n == 1) return;
  const double gain = (1.0 - kPole) * (1.0 - 1.0 / kPole);
  for (std::int64_t k = 0; k < n; ++k) line[k * stride] *= gain;
  line[0] = initial_causal(line, n, stride);
  for (std::int64_t k = 1; k < n; ++k) {
    line[k * stride] += kPole * line[(k - 1) * stride];
  }
  line[(n - 1) * stride] = initial_anticausal(line, n, stride);
  for (std::int64_t k = n - 2; k >= 0; --k) {
    line[k * stride] = kPole * (line[(k + 1) * stride] - line[k * stride]);
  }
}

void cubic_prefilter_3d(std::vector<double>& coeffs, const Dims& dims) {
  const auto [nx, ny, nz] = dims;
  // x lines
  parallel_for(ny * nz, [&](std::int64_t i) {
    cubic_prefilter_1d(coeffs.data() + i * nx, nx, 1);
  });
  // y lines
  parallel_for(nx * nz, [&](std::int64_t i) {
    const std::int64_t z = i / nx;
    const std::int64_t x = i % nx;
    cubic_prefilter_1d(coeffs.data() + x + z * nx * ny, ny, nx);
  });
  // z lines
  parallel_for(nx * ny, [&](std::int64_t i) {
    cubic_prefilter_1d(coeffs.data() + i, nz, nx * ny);
  });
}

double cubic_eval(const std::vector<double>& coeffs, const Dims& dims, double x, double y,
                  double z) {
  const auto [nx, ny, nz] = dims;
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const auto bx = static_cast<std::int64_t>(fx);
  const auto by = static_cast<std::int64_t>(fy);
  const auto bz = static_cast<std::int64_t>(fz);
  double wx[4], wy[4], wz[4];
  cubic_weights(x - fx, wx);
  cubic_weights(y - fy, wy);
  cubic_weights(z - fz, wz);
  std::int64_t ix[4], iy[4], iz[4];
  for (int k = 0; k < 4; ++k) {
    ix[k] = mirror_index(bx - 1 + k, nx);
    iy[k] = mirror_index(by - 1 + k, ny);
    iz[k] = mirror_index(bz - 1 + k, nz);
  }
  double acc = 0.0;
  for (int kz = 0; kz < 4; ++kz) {
    double acc_y = 0.0;
    const std::int64_t oz = iz[kz] * nx * ny;
    for (int ky = 0; ky < 4; ++ky) {
      const std::int64_t oy = oz + iy[ky] * nx;
      double acc_x = 0.0;
      for (int kx = 0; kx < 4; ++kx) {
        acc_x += wx[kx] * coeffs[static_cast<std::size_t>(oy + ix[kx])];
      }
      acc_y += wy[ky] * acc_x;
    }
    acc += wz[kz] * acc_y;
  }
  return acc;
}

double linear_eval(const std::vector<double>& samples, const Dims& dims, double x, double y,
                   double z) {
  const auto [nx, ny, nz] = dims;
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const auto bx = static_cast<std::int64_t>(fx);
  const auto by = static_cast<std::int64_t>(fy);
  const auto bz = static_cast<std::int64_t>(fz);
  const double tx = x - fx, ty = y - fy, tz = z - fz;
  const double wx[2] = {1.0 - tx, tx};
  const double wy[2] = {1.0 - ty, ty};
  const double wz[2] = {1.0 - tz, tz};
  double acc = 0.0;
  for (int kz = 0; kz < 2; ++kz) {
    const std::int64_t oz = mirror_index(bz + kz, nz) * nx * ny;
    for (int ky = 0; ky < 2; ++ky) {
      const std::int64_t oy = oz + mirror_index(by + ky, ny) * nx;
      for (int kx = 0; kx < 2; ++kx) {
        acc += wx[kx] * wy[ky] * wz[kz] *
               samples[static_cast<std::size_t>(oy + mirror_index(bx + kx, nx))];
      }
    }
  }
  return acc;
}

}  // namespace vsseg
