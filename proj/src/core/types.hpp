#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/error.hpp"

namespace vsseg {

using Dims = std::array<std::int64_t, 3>;
using Spacing = std::array<double, 3>;

// NIfTI orientation fields carried through I/O untouched. They are never used
// for geometry; all processing works in voxel-index space scaled by spacing.
struct NiftiMeta {
  float qfac = 1.0f;  // pixdim[0]
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  float quatern_b = 0.0f, quatern_c = 0.0f, quatern_d = 0.0f;
  float qoffset_x = 0.0f, qoffset_y = 0.0f, qoffset_z = 0.0f;
  std::array<float, 4> srow_x{}, srow_y{}, srow_z{};
};

inline std::int64_t voxel_count(const Dims& d) { return d[0] * d[1] * d[2]; }

// Flat index for voxel (x, y, z): x runs fastest.
inline std::int64_t flat_index(const Dims& d, std::int64_t x, std::int64_t y, std::int64_t z) {
  return x + d[0] * (y + d[1] * z);
}

// Dense 3D scalar grid of float32 intensities with mm voxel spacing.
class Volume {
 public:
  Volume(Dims dims, Spacing spacing, std::vector<float> data, NiftiMeta meta = {});

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  const std::vector<float>& data() const noexcept { return data_; }
  const NiftiMeta& meta() const noexcept { return meta_; }

  float at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[flat_index(dims_, x, y, z)];
  }

 private:
  Dims dims_;
  Spacing spacing_;
  std::vector<float> data_;
  NiftiMeta meta_;
};

// Dense 3D grid of class IDs: 0 background, 1 VS, 2 cochlea.
class LabelVolume {
 public:
  static constexpr std::uint8_t kNumClasses = 3;

  LabelVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> data, NiftiMeta meta = {});

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  const NiftiMeta& meta() const noexcept { return meta_; }

  std::uint8_t at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[flat_index(dims_, x, y, z)];
  }

 private:
  Dims dims_;
  Spacing spacing_;
  std::vector<std::uint8_t> data_;
  NiftiMeta meta_;
};

// Per-class soft predictions, class-major storage: data[c * nvox + flat_xyz].
// Matches a 4D NIfTI with dim[4] = num_classes.
class ProbabilityMap {
 public:
  ProbabilityMap(int num_classes, Dims dims, Spacing spacing, std::vector<float> data,
                 NiftiMeta meta = {});

  int num_classes() const noexcept { return num_classes_; }
  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  const std::vector<float>& data() const noexcept { return data_; }
  const NiftiMeta& meta() const noexcept { return meta_; }

  float at(int c, std::int64_t flat) const {
    return data_[static_cast<std::int64_t>(c) * voxel_count(dims_) + flat];
  }

 private:
  int num_classes_;
  Dims dims_;
  Spacing spacing_;
  std::vector<float> data_;
  NiftiMeta meta_;
};

void check_dims_positive(const Dims& d);
void check_spacing_valid(const Spacing& s);

}  // namespace vsseg
