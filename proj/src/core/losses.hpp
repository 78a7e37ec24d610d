#pragma once

#include <cstdint>
#include <vector>

#include "core/types.hpp"

namespace vsseg {

// Soft predictions and one-hot targets in class-major double arrays
// (size num_classes * num_voxels). Losses run in double so gradient checks
// against central finite differences stay meaningful.
struct LossInput {
  int num_classes = 0;
  std::int64_t num_voxels = 0;
  std::vector<double> predictions;  // p, class-major
  std::vector<double> targets;      // g, one-hot, class-major

  void validate() const;
};

LossInput make_loss_input(const ProbabilityMap& pred, const LabelVolume& target);

struct LossResult {
  double value = 0.0;
  double raw = 0.0;                // cross-entropy only: the undivided sum
  std::vector<double> gradient;    // d value / d prediction, class-major
};

// Soft dice of the paper's form: value = (-2/C) * sum_c (sum pg + eps) /
// (sum p + sum g + eps). With eps = 0 an absent class (both sums zero)
// contributes ratio 1 and zero gradient.
LossResult dice_loss(const LossInput& input, double epsilon);

// Per-class binary cross-entropy summed over classes and voxels, predictions
// clamped to [1e-7, 1 - 1e-7]; value is the sum divided by the voxel count,
// raw the plain sum.
LossResult cross_entropy_loss(const LossInput& input);

// w_dice * dice + w_ce * cross-entropy (the mean form), gradients included.
LossResult combined_loss(const LossInput& input, double epsilon, double w_dice,
                         double w_ce);

// Deep-supervision aggregation: weights proportional to 2^-k (k = 0 is full
// resolution), normalized to sum 1; the deepest level can be dropped.
double deep_supervision_aggregate(const std::vector<double>& level_losses,
                                  bool exclude_deepest = false);

constexpr double kLogClamp = 1e-7;

}  // namespace vsseg
