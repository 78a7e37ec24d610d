#include "core/augment.hpp"

#include <algorithm>
#include <cmath>

#include "core/bspline.hpp"
#include "core/parallel.hpp"
#include "core/preprocess.hpp"
#include "core/rng.hpp"

namespace vsseg {

namespace {

struct KindName {
  AugmentationKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {AugmentationKind::rotate, "rotate"},       {AugmentationKind::noise, "noise"},
    {AugmentationKind::scale, "scale"},         {AugmentationKind::translate, "translate"},
    {AugmentationKind::contrast, "contrast"},   {AugmentationKind::flip_x, "flip_x"},
    {AugmentationKind::flip_y, "flip_y"},       {AugmentationKind::flip_z, "flip_z"},
};

// Inverse map of the three continuous spatial kinds, in index space.
struct InverseMap {
  AugmentationKind kind;
  double cx, cy, cz;        // grid center
  double sx, sy;            // in-plane spacing, used by rotate
  double cos_t = 1.0, sin_t = 0.0;
  double inv_factor = 1.0;
  double offset[3] = {0.0, 0.0, 0.0};

  void source(double x, double y, double z, double* u, double* v, double* w) const {
    switch (kind) {
      case AugmentationKind::rotate: {
        const double px = (x - cx) * sx;
        const double py = (y - cy) * sy;
        *u = (cos_t * px + sin_t * py) / sx + cx;
        *v = (-sin_t * px + cos_t * py) / sy + cy;
        *w = z;
        return;
      }
      case AugmentationKind::scale:
        *u = cx + (x - cx) * inv_factor;
        *v = cy + (y - cy) * inv_factor;
        *w = cz + (z - cz) * inv_factor;
        return;
      default:  // translate
        *u = x - offset[0];
        *v = y - offset[1];
        *w = z - offset[2];
        return;
    }
  }
};

InverseMap draw_inverse_map(const Dims& dims, const Spacing& spacing,
                            const AugmentationSpec& spec) {
  const Philox4x32 rng(spec.seed, Philox4x32::kParamStream);
  InverseMap m;
  m.kind = spec.kind;
  m.cx = static_cast<double>(dims[0] - 1) / 2.0;
  m.cy = static_cast<double>(dims[1] - 1) / 2.0;
  m.cz = static_cast<double>(dims[2] - 1) / 2.0;
  m.sx = spacing[0];
  m.sy = spacing[1];
  switch (spec.kind) {
    case AugmentationKind::rotate: {
      const double deg = rng.uniform_at(0, spec.degrees_range[0], spec.degrees_range[1]);
      const double rad = deg * 3.14159265358979323846 / 180.0;
      m.cos_t = std::cos(rad);
      m.sin_t = std::sin(rad);
      break;
    }
    case AugmentationKind::scale:
      m.inv_factor = 1.0 / rng.uniform_at(0, spec.scale_range[0], spec.scale_range[1]);
      break;
    case AugmentationKind::translate:
      for (int a = 0; a < 3; ++a) {
        m.offset[a] = rng.uniform_at(static_cast<std::uint64_t>(a),
                                     spec.translate_range[0], spec.translate_range[1]);
      }
      break;
    default:
      throw ParamError("not a continuous spatial kind");
  }
  return m;
}

bool inside_grid(double u, std::int64_t n) { return u >= -0.5 && u <= n - 0.5; }

std::int64_t nearest_index(double u, std::int64_t n) {
  return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(u - 0.5)), 0, n - 1);
}

template <typename T>
std::vector<T> flip_axis(const std::vector<T>& in, const Dims& dims, int axis) {
  const auto [nx, ny, nz] = dims;
  std::vector<T> out(in.size());
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        const std::int64_t sx = axis == 0 ? nx - 1 - x : x;
        const std::int64_t sy = axis == 1 ? ny - 1 - y : y;
        const std::int64_t sz = axis == 2 ? nz - 1 - z : z;
        out[static_cast<std::size_t>(flat_index(dims, x, y, z))] =
            in[static_cast<std::size_t>(flat_index(dims, sx, sy, sz))];
      }
    }
  }
  return out;
}

int flip_axis_of(AugmentationKind kind) {
  switch (kind) {
    case AugmentationKind::flip_x:
      return 0;
    case AugmentationKind::flip_y:
      return 1;
    default:
      return 2;
  }
}

Volume resample_spatial(const Volume& vol, const AugmentationSpec& spec, int order) {
  const Dims dims = vol.dims();
  const auto [nx, ny, nz] = dims;
  const InverseMap map = draw_inverse_map(dims, vol.spacing(), spec);

  std::vector<double> field(vol.data().begin(), vol.data().end());
  if (order == 3) cubic_prefilter_3d(field, dims);

  std::vector<float> out(vol.data().size());
  parallel_for(nz, [&](std::int64_t z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      float* row = out.data() + (y + z * ny) * nx;
      for (std::int64_t x = 0; x < nx; ++x) {
        double u, v, w;
        map.source(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z),
                   &u, &v, &w);
        if (!inside_grid(u, nx) || !inside_grid(v, ny) || !inside_grid(w, nz)) {
          row[x] = 0.0f;
          continue;
        }
        double value;
        if (order == 3) {
          value = cubic_eval(field, dims, u, v, w);
        } else if (order == 1) {
          value = linear_eval(field, dims, u, v, w);
        } else {
          value = field[static_cast<std::size_t>(flat_index(
              dims, nearest_index(u, nx), nearest_index(v, ny), nearest_index(w, nz)))];
        }
        row[x] = static_cast<float>(value);
      }
    }
  });
  return Volume(dims, vol.spacing(), std::move(out), vol.meta());
}

}  // namespace

AugmentationKind augmentation_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  throw ParamError("unknown augmentation kind \"" + name + "\"");
}

const char* augmentation_kind_name(AugmentationKind kind) {
  return kKindNames[static_cast<int>(kind)].name;
}

bool is_spatial_kind(AugmentationKind kind) {
  return kind != AugmentationKind::noise && kind != AugmentationKind::contrast;
}

void AugmentationSpec::validate() const {
  auto check_range = [](const double r[2], const char* what) {
    if (!(r[0] <= r[1]) || !std::isfinite(r[0]) || !std::isfinite(r[1])) {
      throw ParamError(std::string(what) + " range is invalid");
    }
  };
  check_range(degrees_range, "rotation degrees");
  check_range(scale_range, "scale factor");
  check_range(translate_range, "translation");
  check_range(gamma_range, "contrast gamma");
  check_range(gain_range, "contrast gain");
  if (std::max(std::abs(degrees_range[0]), std::abs(degrees_range[1])) > 20.0 + 1e-12) {
    throw ParamError("rotation range exceeds the 20 degree limit");
  }
  if (!(scale_range[0] > 0.0)) throw ParamError("scale factors must be positive");
  if (!(gamma_range[0] > 0.0)) throw ParamError("contrast gamma must be positive");
  if (!(noise_sigma_frac >= 0.0) || !std::isfinite(noise_sigma_frac)) {
    throw ParamError("noise sigma fraction must be non-negative");
  }
}

std::vector<AugmentationSpec> default_augmentation_specs(std::uint64_t seed) {
  std::vector<AugmentationSpec> specs(kNumAugmentationKinds);
  for (int k = 0; k < kNumAugmentationKinds; ++k) {
    specs[static_cast<std::size_t>(k)].kind = static_cast<AugmentationKind>(k);
    specs[static_cast<std::size_t>(k)].seed =
        Philox4x32::split(seed, static_cast<std::uint64_t>(k));
  }
  return specs;
}

Volume reduce_tumor_signal(const Volume& vol, const LabelVolume& lbl, double factor) {
  if (vol.dims() != lbl.dims()) {
    throw ShapeError("image and label dims differ in reduce_tumor_signal");
  }
  if (!(factor > 0.0) || !(factor <= 1.0)) {
    throw ParamError("tumor signal factor must be in (0, 1]");
  }
  std::vector<float> out(vol.data());
  const float f = static_cast<float>(factor);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (lbl.data()[i] == 1) out[i] *= f;
  }
  return Volume(vol.dims(), vol.spacing(), std::move(out), vol.meta());
}

Volume apply_augmentation(const Volume& vol, const AugmentationSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case AugmentationKind::flip_x:
    case AugmentationKind::flip_y:
    case AugmentationKind::flip_z:
      return Volume(vol.dims(), vol.spacing(),
                    flip_axis(vol.data(), vol.dims(), flip_axis_of(spec.kind)), vol.meta());
    case AugmentationKind::noise: {
      double mean = 0.0, sd = 0.0;
      volume_mean_std(vol, &mean, &sd);
      const double sigma = spec.noise_sigma_frac * sd;
      const Philox4x32 rng(spec.seed, Philox4x32::kNoiseStream);
      std::vector<float> out(vol.data().size());
      parallel_for(static_cast<std::int64_t>(out.size()), [&](std::int64_t i) {
        out[static_cast<std::size_t>(i)] = static_cast<float>(
            double{vol.data()[static_cast<std::size_t>(i)]} +
            sigma * rng.normal_at(static_cast<std::uint64_t>(i)));
      });
      return Volume(vol.dims(), vol.spacing(), std::move(out), vol.meta());
    }
    case AugmentationKind::contrast: {
      const Philox4x32 rng(spec.seed, Philox4x32::kParamStream);
      const double gamma = rng.uniform_at(0, spec.gamma_range[0], spec.gamma_range[1]);
      const double gain = rng.uniform_at(1, spec.gain_range[0], spec.gain_range[1]);
      std::vector<float> out(vol.data().size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = double{vol.data()[i]};
        const double mag = std::pow(std::abs(v), gamma);
        out[i] = static_cast<float>(gain * std::copysign(mag, v));
      }
      return Volume(vol.dims(), vol.spacing(), std::move(out), vol.meta());
    }
    default:
      return resample_spatial(vol, spec, 3);
  }
}

Volume apply_spatial_with_order(const Volume& vol, const AugmentationSpec& spec, int order) {
  spec.validate();
  if (!is_spatial_kind(spec.kind)) {
    throw ParamError("kind \"" + std::string(augmentation_kind_name(spec.kind)) +
                     "\" is not spatial");
  }
  if (spec.kind == AugmentationKind::flip_x || spec.kind == AugmentationKind::flip_y ||
      spec.kind == AugmentationKind::flip_z) {
    return Volume(vol.dims(), vol.spacing(),
                  flip_axis(vol.data(), vol.dims(), flip_axis_of(spec.kind)), vol.meta());
  }
  return resample_spatial(vol, spec, order);
}

LabelVolume apply_spatial_to_label(const LabelVolume& lbl, const AugmentationSpec& spec) {
  spec.validate();
  if (!is_spatial_kind(spec.kind)) {
    throw ParamError("kind \"" + std::string(augmentation_kind_name(spec.kind)) +
                     "\" cannot be applied to labels");
  }
  const Dims dims = lbl.dims();
  const auto [nx, ny, nz] = dims;
  if (spec.kind == AugmentationKind::flip_x || spec.kind == AugmentationKind::flip_y ||
      spec.kind == AugmentationKind::flip_z) {
    return LabelVolume(dims, lbl.spacing(),
                       flip_axis(lbl.data(), dims, flip_axis_of(spec.kind)), lbl.meta());
  }
  const InverseMap map = draw_inverse_map(dims, lbl.spacing(), spec);
  std::vector<std::uint8_t> out(lbl.data().size());
  parallel_for(nz, [&](std::int64_t z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      std::uint8_t* row = out.data() + (y + z * ny) * nx;
      for (std::int64_t x = 0; x < nx; ++x) {
        double u, v, w;
        map.source(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z),
                   &u, &v, &w);
        if (!inside_grid(u, nx) || !inside_grid(v, ny) || !inside_grid(w, nz)) {
          row[x] = 0;
          continue;
        }
        row[x] = lbl.data()[static_cast<std::size_t>(flat_index(
            dims, nearest_index(u, nx), nearest_index(v, ny), nearest_index(w, nz)))];
      }
    }
  });
  return LabelVolume(dims, lbl.spacing(), std::move(out), lbl.meta());
}

std::vector<Volume> expand_dataset(const std::vector<Volume>& images,
                                   const std::vector<AugmentationSpec>& specs) {
  if (specs.size() != kNumAugmentationKinds) {
    throw ParamError("expand_dataset needs exactly 8 augmentation specs");
  }
  bool seen[kNumAugmentationKinds] = {};
  for (const auto& s : specs) {
    if (seen[static_cast<int>(s.kind)]) {
      throw ParamError("duplicate augmentation kind \"" +
                       std::string(augmentation_kind_name(s.kind)) + "\"");
    }
    seen[static_cast<int>(s.kind)] = true;
    s.validate();
  }
  std::vector<Volume> out;
  out.reserve(images.size() * kNumAugmentationKinds);
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& s : specs) {
      AugmentationSpec child = s;
      child.seed = Philox4x32::split(s.seed, static_cast<std::uint64_t>(i));
      out.push_back(apply_augmentation(images[i], child));
    }
  }
  return out;
}

}  // namespace vsseg
