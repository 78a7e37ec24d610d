#pragma once

#include <vector>

#include "core/types.hpp"

namespace vsseg {

// Voxelwise weighted arithmetic mean of class probabilities, renormalized per
// voxel. Weights default to uniform; they must be non-negative with a
// positive sum.
ProbabilityMap ensemble_probs(const std::vector<const ProbabilityMap*>& maps,
                              const std::vector<double>& weights = {});

// Per-voxel argmax; exact ties go to the smallest class index, so background
// wins ties that include it.
LabelVolume argmax_labels(const ProbabilityMap& map);

}  // namespace vsseg
