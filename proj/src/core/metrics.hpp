#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace vsseg {

// Overlap 2|P&G| / (|P|+|G|) for one class; both masks empty -> 1, exactly
// one empty -> 0.
double dice_score(const LabelVolume& pred, const LabelVolume& truth, int class_id);

// Boundary voxels of a class: 6-connectivity face boundary, including voxels
// on the volume border. Returned as flat indices.
std::vector<std::int64_t> boundary_voxels(const LabelVolume& lbl, int class_id);

// Average symmetric surface distance in mm between the face boundaries of the
// two masks, voxel-center coordinates. Nearest distances come from an exact
// Euclidean distance transform; an all-pairs oracle defines correctness.
// Throws UndefinedMetricError when either mask is empty for the class.
double assd(const LabelVolume& pred, const LabelVolume& truth, int class_id);

// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher) to
// the set of seed voxels, anisotropic spacing in mm. INF where no seed exists.
std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& seeds,
                                               const Dims& dims, const Spacing& spacing);

struct FeatureStats {
  std::vector<double> mean;         // d
  std::vector<double> covariance;   // d x d, row-major, symmetric PSD
  std::int64_t count = 0;

  std::size_t dim() const { return mean.size(); }
  void validate() const;
};

// Column means and sample covariance (divisor n-1) of an n x d row-major
// feature matrix; n >= 2.
FeatureStats feature_stats(const std::vector<double>& features, std::int64_t rows,
                           std::int64_t cols);

// Frechet distance between the Gaussians (mu_a, Sigma_a) and (mu_b, Sigma_b):
// |mu_a - mu_b|^2 + Tr(Sigma_a + Sigma_b - 2 (Sigma_a Sigma_b)^{1/2}).
double frechet_distance(const FeatureStats& a, const FeatureStats& b);

// One feature vector per CSV row, comma-separated.
std::vector<double> read_feature_csv(const std::string& path, std::int64_t* rows,
                                     std::int64_t* cols);

struct CaseMetrics {
  std::string case_id;
  int class_id = 0;
  double dice = 0.0;
  std::optional<double> assd_mm;  // empty when undefined (empty mask)
};

// Evaluates dice and ASSD for each (pred, truth) pair and class, then writes
// a JSON report with per-case values and mean +/- std per class. Returns the
// serialized report.
std::string metrics_report(const std::vector<std::string>& pred_paths,
                           const std::vector<std::string>& truth_paths,
                           const std::vector<int>& classes,
                           const std::string& out_path);

}  // namespace vsseg
