#include "core/losses.hpp"

#include <algorithm>
#include <cmath>

#include "core/sum.hpp"

namespace vsseg {

void LossInput::validate() const {
  if (num_classes < 1) throw ParamError("loss input needs at least one class");
  if (num_voxels < 1) throw ParamError("loss input needs at least one voxel");
  const auto expected = static_cast<std::size_t>(num_classes) *
                        static_cast<std::size_t>(num_voxels);
  if (predictions.size() != expected || targets.size() != expected) {
    throw ShapeError("loss input arrays must both have num_classes * num_voxels entries");
  }
}

LossInput make_loss_input(const ProbabilityMap& pred, const LabelVolume& target) {
  if (pred.dims() != target.dims()) {
    throw ShapeError("prediction and target dims differ");
  }
  LossInput in;
  in.num_classes = pred.num_classes();
  in.num_voxels = voxel_count(pred.dims());
  in.predictions.assign(pred.data().begin(), pred.data().end());
  in.targets.assign(in.predictions.size(), 0.0);
  const auto nvox = static_cast<std::size_t>(in.num_voxels);
  for (std::size_t i = 0; i < nvox; ++i) {
    const int cls = target.data()[i];
    if (cls >= in.num_classes) {
      throw ShapeError("target class exceeds the prediction's class count");
    }
    in.targets[static_cast<std::size_t>(cls) * nvox + i] = 1.0;
  }
  return in;
}

LossResult dice_loss(const LossInput& input, double epsilon) {
  input.validate();
  if (epsilon < 0.0) throw ParamError("dice epsilon must be >= 0");

  const auto n = static_cast<std::size_t>(input.num_voxels);
  const int C = input.num_classes;
  const double* p = input.predictions.data();
  const double* g = input.targets.data();

  LossResult res;
  res.gradient.assign(input.predictions.size(), 0.0);
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    const double* pc = p + static_cast<std::size_t>(c) * n;
    const double* gc = g + static_cast<std::size_t>(c) * n;
    const double inter = pairwise_sum(n, [&](std::size_t i) { return pc[i] * gc[i]; });
    const double sum_p = pairwise_sum(n, [&](std::size_t i) { return pc[i]; });
    const double sum_g = pairwise_sum(n, [&](std::size_t i) { return gc[i]; });
    const double num = inter + epsilon;
    const double den = sum_p + sum_g + epsilon;
    if (den == 0.0) {
      // eps = 0 and the class is absent on both sides: perfectly predicted
      // absence, flat contribution.
      total += 1.0;
      continue;
    }
    total += num / den;
    const double scale = -2.0 / static_cast<double>(C);
    double* grad_c = res.gradient.data() + static_cast<std::size_t>(c) * n;
    const double inv_den2 = 1.0 / (den * den);
    for (std::size_t i = 0; i < n; ++i) {
      grad_c[i] = scale * (gc[i] * den - num) * inv_den2;
    }
  }
  res.value = -2.0 / static_cast<double>(C) * total;
  res.raw = res.value;
  return res;
}

LossResult cross_entropy_loss(const LossInput& input) {
  input.validate();
  const auto n = static_cast<std::size_t>(input.num_voxels);
  const std::size_t total = input.predictions.size();
  const double* p = input.predictions.data();
  const double* g = input.targets.data();

  LossResult res;
  res.gradient.assign(total, 0.0);
  const double lo = kLogClamp;
  const double hi = 1.0 - kLogClamp;
  res.raw = pairwise_sum(total, [&](std::size_t i) {
    const double q = std::clamp(p[i], lo, hi);
    return -g[i] * std::log(q) - (1.0 - g[i]) * std::log(1.0 - q);
  });
  const double inv_n = 1.0 / static_cast<double>(n);
  res.value = res.raw * inv_n;
  for (std::size_t i = 0; i < total; ++i) {
    if (p[i] <= lo || p[i] >= hi) continue;  // clamp region: flat
    res.gradient[i] = (-g[i] / p[i] + (1.0 - g[i]) / (1.0 - p[i])) * inv_n;
  }
  return res;
}

LossResult combined_loss(const LossInput& input, double epsilon, double w_dice,
                         double w_ce) {
  if (w_dice < 0.0 || w_ce < 0.0) throw ParamError("loss weights must be >= 0");
  LossResult dice = dice_loss(input, epsilon);
  LossResult ce = cross_entropy_loss(input);
  LossResult res;
  res.value = w_dice * dice.value + w_ce * ce.value;
  res.raw = w_dice * dice.raw + w_ce * ce.raw;
  res.gradient.resize(dice.gradient.size());
  for (std::size_t i = 0; i < res.gradient.size(); ++i) {
    res.gradient[i] = w_dice * dice.gradient[i] + w_ce * ce.gradient[i];
  }
  return res;
}

double deep_supervision_aggregate(const std::vector<double>& level_losses,
                                  bool exclude_deepest) {
  if (level_losses.empty()) throw ParamError("deep supervision needs at least one level");
  std::size_t levels = level_losses.size();
  if (exclude_deepest && levels > 1) levels -= 1;
  double weight_sum = 0.0;
  double acc = 0.0;
  double w = 1.0;
  for (std::size_t k = 0; k < levels; ++k, w *= 0.5) {
    acc += w * level_losses[k];
    weight_sum += w;
  }
  return acc / weight_sum;
}

}  // namespace vsseg
