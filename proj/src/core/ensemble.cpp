#include "core/ensemble.hpp"

#include <cmath>

namespace vsseg {

ProbabilityMap ensemble_probs(const std::vector<const ProbabilityMap*>& maps,
                              const std::vector<double>& weights) {
  if (maps.empty()) throw ParamError("ensemble needs at least one probability map");
  for (const auto* m : maps) {
    if (m == nullptr) throw ParamError("null probability map in ensemble");
    if (m->dims() != maps[0]->dims() || m->num_classes() != maps[0]->num_classes()) {
      throw ShapeError("ensemble inputs disagree on dims or class count");
    }
  }
  std::vector<double> w(maps.size(), 1.0);
  if (!weights.empty()) {
    if (weights.size() != maps.size()) {
      throw ParamError("weight count does not match map count");
    }
    double sum = 0.0;
    for (const double x : weights) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw ParamError("weights must be >= 0");
      sum += x;
    }
    if (!(sum > 0.0)) throw ParamError("weights must not all be zero");
    w = weights;
  }
  const double w_total = [&] {
    double s = 0.0;
    for (const double x : w) s += x;
    return s;
  }();

  const int C = maps[0]->num_classes();
  const std::int64_t nvox = voxel_count(maps[0]->dims());
  std::vector<float> out(static_cast<std::size_t>(nvox) * static_cast<std::size_t>(C));
  for (std::int64_t i = 0; i < nvox; ++i) {
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (std::size_t m = 0; m < maps.size(); ++m) acc += w[m] * maps[m]->at(c, i);
      acc /= w_total;
      out[static_cast<std::size_t>(c) * nvox + i] = static_cast<float>(acc);
      sum += acc;
    }
    if (!(sum > 0.0)) {
      throw NumericError("ensembled probabilities sum to zero at voxel " +
                         std::to_string(i));
    }
    for (int c = 0; c < C; ++c) {
      auto& v = out[static_cast<std::size_t>(c) * nvox + i];
      v = static_cast<float>(double{v} / sum);
    }
  }
  return ProbabilityMap(C, maps[0]->dims(), maps[0]->spacing(), std::move(out),
                        maps[0]->meta());
}

LabelVolume argmax_labels(const ProbabilityMap& map) {
  const std::int64_t nvox = voxel_count(map.dims());
  const int C = map.num_classes();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(nvox));
  for (std::int64_t i = 0; i < nvox; ++i) {
    int best = 0;
    float best_p = map.at(0, i);
    for (int c = 1; c < C; ++c) {
      const float p = map.at(c, i);
      if (p > best_p) {  // strict: ties keep the smaller class
        best_p = p;
        best = c;
      }
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
  }
  return LabelVolume(map.dims(), map.spacing(), std::move(out), map.meta());
}

}  // namespace vsseg
