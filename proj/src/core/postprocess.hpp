#pragma once

#include <cstdint>
#include <vector>

#include "core/types.hpp"

namespace vsseg {

struct ComponentLabeling {
  // Per-voxel component label, 0 for background. Labels are 1..n ordered by
  // decreasing size, ties broken by the smallest contained flat index.
  std::vector<std::int32_t> labels;
  std::vector<std::int64_t> sizes;  // sizes[i] is the voxel count of label i+1
};

// Connected components of a binary mask under 6- or 26-connectivity.
ComponentLabeling connected_components(const std::vector<std::uint8_t>& mask,
                                       const Dims& dims, int connectivity);

// Keeps only the largest 26-connected component of `class_id` (default VS);
// other classes pass through untouched. No-op when the class is absent.
LabelVolume keep_largest_component(const LabelVolume& pred, int class_id = 1);

}  // namespace vsseg
