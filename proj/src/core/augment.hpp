#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace vsseg {

enum class AugmentationKind {
  rotate,
  noise,
  scale,
  translate,
  contrast,
  flip_x,
  flip_y,
  flip_z,
};
constexpr int kNumAugmentationKinds = 8;

AugmentationKind augmentation_kind_from_string(const std::string& name);
const char* augmentation_kind_name(AugmentationKind kind);
bool is_spatial_kind(AugmentationKind kind);

// One augmentation with its sampling ranges. A degenerate range ({x, x})
// pins a parameter. Draw order per kind (Philox key = seed, param stream):
//   rotate    draw 0: degrees in degrees_range
//   scale     draw 0: factor in scale_range
//   translate draws 0,1,2: x,y,z offsets (voxels) in translate_range
//   contrast  draw 0: gamma in gamma_range; draw 1: gain in gain_range
//   noise     no parameter draws; per-voxel normals use the noise stream
//             addressed by flat voxel index
//   flips     no draws
struct AugmentationSpec {
  AugmentationKind kind = AugmentationKind::rotate;
  std::uint64_t seed = 0;
  double degrees_range[2] = {-20.0, 20.0};
  double noise_sigma_frac = 0.1;  // sigma = frac * std(volume)
  double scale_range[2] = {0.9, 1.1};
  double translate_range[2] = {-10.0, 10.0};
  double gamma_range[2] = {0.7, 1.5};
  double gain_range[2] = {0.75, 1.25};

  void validate() const;
};

// Returns the eight kinds with default parameters, seeds derived from `seed`.
std::vector<AugmentationSpec> default_augmentation_specs(std::uint64_t seed);

// Multiplies intensities under the VS mask (label 1) by `factor`; everything
// else passes through. The paper's AT dataset uses factor 0.5.
Volume reduce_tumor_signal(const Volume& vol, const LabelVolume& lbl, double factor = 0.5);

// Deterministic in (vol, spec): spatial kinds resample back onto the input
// grid (cubic, zero outside), flips permute, noise adds gaussians, contrast
// maps v -> gain * sign(v) * |v|^gamma (intended for z-scored data).
Volume apply_augmentation(const Volume& vol, const AugmentationSpec& spec);

// Same geometry as apply_augmentation under the same seed, nearest-neighbor
// sampling. Rejects intensity-only kinds.
LabelVolume apply_spatial_to_label(const LabelVolume& lbl, const AugmentationSpec& spec);

// Used by the consistency tests: the spatial transform of `spec` applied with
// an explicit interpolation order (1 = trilinear).
Volume apply_spatial_with_order(const Volume& vol, const AugmentationSpec& spec, int order);

// 8 outputs per input, ordered images-major then kind. Entry (i, k) uses the
// child seed split(specs[k].seed, i).
std::vector<Volume> expand_dataset(const std::vector<Volume>& images,
                                   const std::vector<AugmentationSpec>& specs);

}  // namespace vsseg
