#pragma once

#include "core/types.hpp"

namespace vsseg {

struct ResampleSpec {
  Spacing target_spacing{1.0, 1.0, 1.0};
  int image_order = 3;  // 0 nearest, 1 trilinear, 3 cubic B-spline
};

// Output grid rule shared by both resamplers: per axis,
// round_half_away(dim * spacing / target), clamped to >= 1. Voxel centers sit
// at index * spacing with a common origin, so output index i samples input
// coordinate i * target / spacing.
Dims resampled_dims(const Dims& dims, const Spacing& spacing, const Spacing& target);

// Intensity resampling; order 3 uses a prefiltered cubic B-spline with mirror
// boundaries, so the interpolant passes through the original samples.
Volume resample_image(const Volume& vol, const ResampleSpec& spec);

// Nearest input voxel center, exact ties toward the smaller index per axis.
LabelVolume resample_label(const LabelVolume& lbl, const ResampleSpec& spec);

// Center crop (excess split floor/ceil with the extra voxel removed from the
// high side) or center zero-pad in the xy-plane; z untouched.
Volume crop_or_pad_xy(const Volume& vol, std::int64_t tx, std::int64_t ty);
LabelVolume crop_or_pad_xy(const LabelVolume& lbl, std::int64_t tx, std::int64_t ty);

// Whole-volume z-score with the population standard deviation (divisor N).
// Throws ValidationError when the volume is constant.
Volume normalize_3d(const Volume& vol);

// Mean and population std over all voxels, computed with a deterministic
// pairwise summation.
void volume_mean_std(const Volume& vol, double* mean, double* std_dev);

}  // namespace vsseg
