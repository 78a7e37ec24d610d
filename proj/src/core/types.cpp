#include "core/types.hpp"

#include <cmath>
#include <string>

namespace vsseg {

void check_dims_positive(const Dims& d) {
  for (int a = 0; a < 3; ++a) {
    if (d[a] <= 0) {
      throw DimensionError("dimension " + std::to_string(a) + " must be positive, got " +
                           std::to_string(d[a]));
    }
  }
}

void check_spacing_valid(const Spacing& s) {
  for (int a = 0; a < 3; ++a) {
    if (!(s[a] > 0.0) || !std::isfinite(s[a])) {
      throw ValidationError("spacing component " + std::to_string(a) +
                            " must be positive and finite");
    }
  }
}

Volume::Volume(Dims dims, Spacing spacing, std::vector<float> data, NiftiMeta meta)
    : dims_(dims), spacing_(spacing), data_(std::move(data)), meta_(meta) {
  check_dims_positive(dims_);
  check_spacing_valid(spacing_);
  if (static_cast<std::int64_t>(data_.size()) != voxel_count(dims_)) {
    throw ShapeError("volume data length " + std::to_string(data_.size()) +
                     " does not match dims product " + std::to_string(voxel_count(dims_)));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("non-finite intensity at flat index " + std::to_string(i));
    }
  }
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> data,
                         NiftiMeta meta)
    : dims_(dims), spacing_(spacing), data_(std::move(data)), meta_(meta) {
  check_dims_positive(dims_);
  check_spacing_valid(spacing_);
  if (static_cast<std::int64_t>(data_.size()) != voxel_count(dims_)) {
    throw ShapeError("label data length " + std::to_string(data_.size()) +
                     " does not match dims product " + std::to_string(voxel_count(dims_)));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] >= kNumClasses) {
      throw ValidationError("label value " + std::to_string(int(data_[i])) +
                            " out of {0,1,2} at flat index " + std::to_string(i));
    }
  }
}

ProbabilityMap::ProbabilityMap(int num_classes, Dims dims, Spacing spacing,
                               std::vector<float> data, NiftiMeta meta)
    : num_classes_(num_classes),
      dims_(dims),
      spacing_(spacing),
      data_(std::move(data)),
      meta_(meta) {
  check_dims_positive(dims_);
  check_spacing_valid(spacing_);
  if (num_classes_ < 1) {
    throw ParamError("probability map needs at least one class");
  }
  const std::int64_t nvox = voxel_count(dims_);
  if (static_cast<std::int64_t>(data_.size()) != nvox * num_classes_) {
    throw ShapeError("probability data length " + std::to_string(data_.size()) +
                     " does not match num_classes * voxels = " +
                     std::to_string(nvox * num_classes_));
  }
  for (std::int64_t i = 0; i < nvox; ++i) {
    double sum = 0.0;
    for (int c = 0; c < num_classes_; ++c) {
      const float v = data_[static_cast<std::int64_t>(c) * nvox + i];
      if (!(v >= 0.0f) || !(v <= 1.0f)) {
        throw ValidationError("probability outside [0,1] at voxel " + std::to_string(i) +
                              " class " + std::to_string(c));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-4) {
      throw ValidationError("class probabilities sum to " + std::to_string(sum) +
                            " at voxel " + std::to_string(i) + " (expected 1 within 1e-4)");
    }
  }
}

}  // namespace vsseg
