#include "core/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/bspline.hpp"
#include "core/parallel.hpp"
#include "core/sum.hpp"

namespace vsseg {

namespace {

void check_spec(const ResampleSpec& spec) {
  check_spacing_valid(spec.target_spacing);
  if (spec.image_order != 0 && spec.image_order != 1 && spec.image_order != 3) {
    throw ParamError("interpolation order must be 0, 1 or 3, got " +
                     std::to_string(spec.image_order));
  }
}

// Nearest sample index for continuous coordinate u; exact half ties go to the
// smaller index.
std::int64_t nearest_index(double u, std::int64_t n) {
  const auto i = static_cast<std::int64_t>(std::ceil(u - 0.5));
  return std::clamp<std::int64_t>(i, 0, n - 1);
}

template <typename T>
std::vector<T> crop_pad_grid(const std::vector<T>& in, const Dims& dims, std::int64_t tx,
                             std::int64_t ty, T fill) {
  const auto [nx, ny, nz] = dims;
  std::vector<T> out(static_cast<std::size_t>(tx * ty * nz), fill);
  // Signed offset of the output window in input coordinates. Cropping keeps
  // [off, off+t); padding places the input at -off.
  const std::int64_t offx = nx >= tx ? (nx - tx) / 2 : -((tx - nx) / 2);
  const std::int64_t offy = ny >= ty ? (ny - ty) / 2 : -((ty - ny) / 2);
  const std::int64_t x0 = std::max<std::int64_t>(0, -offx);
  const std::int64_t y0 = std::max<std::int64_t>(0, -offy);
  const std::int64_t x1 = std::min<std::int64_t>(tx, nx - offx);
  const std::int64_t y1 = std::min<std::int64_t>(ty, ny - offy);
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = y0; y < y1; ++y) {
      const std::int64_t src = (y + offy) * nx + z * nx * ny;
      const std::int64_t dst = y * tx + z * tx * ty;
      std::copy_n(in.begin() + src + (x0 + offx), x1 - x0, out.begin() + dst + x0);
    }
  }
  return out;
}

void check_xy_target(std::int64_t tx, std::int64_t ty) {
  if (tx < 1 || ty < 1) throw ParamError("crop/pad target must be positive");
}

}  // namespace

Dims resampled_dims(const Dims& dims, const Spacing& spacing, const Spacing& target) {
  Dims out;
  for (int a = 0; a < 3; ++a) {
    const double exact = static_cast<double>(dims[a]) * spacing[a] / target[a];
    const std::int64_t rounded = std::llround(exact);
    if (rounded < 1) {
      std::fprintf(stderr,
                   "vsseg: warning: axis %d resamples to %lld voxels, clamping to 1\n", a,
                   static_cast<long long>(rounded));
    }
    out[a] = std::max<std::int64_t>(1, rounded);
  }
  return out;
}

Volume resample_image(const Volume& vol, const ResampleSpec& spec) {
  check_spec(spec);
  const Dims in_dims = vol.dims();
  const Dims out_dims = resampled_dims(in_dims, vol.spacing(), spec.target_spacing);
  const auto [nx, ny, nz] = out_dims;

  double ratio[3];
  for (int a = 0; a < 3; ++a) ratio[a] = spec.target_spacing[a] / vol.spacing()[a];

  std::vector<double> field(vol.data().begin(), vol.data().end());
  if (spec.image_order == 3) cubic_prefilter_3d(field, in_dims);

  std::vector<float> out(static_cast<std::size_t>(voxel_count(out_dims)));
  parallel_for(nz, [&](std::int64_t z) {
    const double uz = static_cast<double>(z) * ratio[2];
    for (std::int64_t y = 0; y < ny; ++y) {
      const double uy = static_cast<double>(y) * ratio[1];
      float* row = out.data() + (y + z * ny) * nx;
      for (std::int64_t x = 0; x < nx; ++x) {
        const double ux = static_cast<double>(x) * ratio[0];
        double v;
        switch (spec.image_order) {
          case 0:
            v = field[static_cast<std::size_t>(
                flat_index(in_dims, nearest_index(ux, in_dims[0]),
                           nearest_index(uy, in_dims[1]), nearest_index(uz, in_dims[2])))];
            break;
          case 1:
            v = linear_eval(field, in_dims, ux, uy, uz);
            break;
          default:
            v = cubic_eval(field, in_dims, ux, uy, uz);
            break;
        }
        row[x] = static_cast<float>(v);
      }
    }
  });
  return Volume(out_dims, spec.target_spacing, std::move(out), vol.meta());
}

LabelVolume resample_label(const LabelVolume& lbl, const ResampleSpec& spec) {
  check_spec(spec);
  const Dims in_dims = lbl.dims();
  const Dims out_dims = resampled_dims(in_dims, lbl.spacing(), spec.target_spacing);
  const auto [nx, ny, nz] = out_dims;

  double ratio[3];
  for (int a = 0; a < 3; ++a) ratio[a] = spec.target_spacing[a] / lbl.spacing()[a];

  std::vector<std::uint8_t> out(static_cast<std::size_t>(voxel_count(out_dims)));
  parallel_for(nz, [&](std::int64_t z) {
    const std::int64_t sz = nearest_index(static_cast<double>(z) * ratio[2], in_dims[2]);
    for (std::int64_t y = 0; y < ny; ++y) {
      const std::int64_t sy = nearest_index(static_cast<double>(y) * ratio[1], in_dims[1]);
      std::uint8_t* row = out.data() + (y + z * ny) * nx;
      const std::uint8_t* src = lbl.data().data() + (sy + sz * in_dims[1]) * in_dims[0];
      for (std::int64_t x = 0; x < nx; ++x) {
        row[x] = src[nearest_index(static_cast<double>(x) * ratio[0], in_dims[0])];
      }
    }
  });
  return LabelVolume(out_dims, spec.target_spacing, std::move(out), lbl.meta());
}

Volume crop_or_pad_xy(const Volume& vol, std::int64_t tx, std::int64_t ty) {
  check_xy_target(tx, ty);
  auto out = crop_pad_grid(vol.data(), vol.dims(), tx, ty, 0.0f);
  return Volume({tx, ty, vol.dims()[2]}, vol.spacing(), std::move(out), vol.meta());
}

LabelVolume crop_or_pad_xy(const LabelVolume& lbl, std::int64_t tx, std::int64_t ty) {
  check_xy_target(tx, ty);
  auto out = crop_pad_grid(lbl.data(), lbl.dims(), tx, ty, std::uint8_t{0});
  return LabelVolume({tx, ty, lbl.dims()[2]}, lbl.spacing(), std::move(out), lbl.meta());
}

void volume_mean_std(const Volume& vol, double* mean, double* std_dev) {
  const auto& d = vol.data();
  const std::size_t n = d.size();
  const double m = pairwise_sum(n, [&](std::size_t i) { return double{d[i]}; }) /
                   static_cast<double>(n);
  const double var = pairwise_sum(n, [&](std::size_t i) {
                       const double dv = double{d[i]} - m;
                       return dv * dv;
                     }) /
                     static_cast<double>(n);
  *mean = m;
  *std_dev = std::sqrt(var);
}

Volume normalize_3d(const Volume& vol) {
  if (voxel_count(vol.dims()) < 2) {
    throw ParamError("normalize_3d needs at least 2 voxels");
  }
  double mean = 0.0, sd = 0.0;
  volume_mean_std(vol, &mean, &sd);
  if (sd == 0.0) {
    throw ValidationError("constant volume: standard deviation is zero");
  }
  std::vector<float> out(vol.data().size());
  const double inv = 1.0 / sd;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>((double{vol.data()[i]} - mean) * inv);
  }
  return Volume(vol.dims(), vol.spacing(), std::move(out), vol.meta());
}

}  // namespace vsseg
