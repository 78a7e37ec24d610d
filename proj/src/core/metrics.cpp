#include "core/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/nifti.hpp"
#include "core/sum.hpp"

#include "json.hpp"

namespace vsseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_metric_inputs(const LabelVolume& pred, const LabelVolume& truth, int class_id) {
  if (pred.dims() != truth.dims()) throw ShapeError("pred and truth dims differ");
  if (class_id < 1 || class_id >= LabelVolume::kNumClasses) {
    throw ParamError("class id must be 1 (VS) or 2 (cochlea)");
  }
}

// 1D lower-envelope pass of the squared-distance transform with sample
// abscissas x_i = i * step (Felzenszwalb & Huttenlocher, ch. 3).
void edt_1d(const double* f, double* d, std::int64_t n, double step, std::int64_t* v,
            double* z, double* fx) {
  std::int64_t k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  fx[0] = f[0];
  for (std::int64_t q = 1; q < n; ++q) {
    fx[q] = f[q];
    if (fx[q] == kInf) continue;
    const double xq = static_cast<double>(q) * step;
    while (true) {
      if (fx[v[k]] == kInf) {
        // no finite parabola yet
        if (k == 0) {
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          break;
        }
        --k;
        continue;
      }
      const double xp = static_cast<double>(v[k]) * step;
      const double s = ((fx[q] + xq * xq) - (fx[v[k]] + xp * xp)) / (2.0 * (xq - xp));
      if (s <= z[k]) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
  }
  if (fx[v[0]] == kInf) {
    for (std::int64_t q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  k = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    const double xq = static_cast<double>(q) * step;
    while (z[k + 1] < xq) ++k;
    const double dx = xq - static_cast<double>(v[k]) * step;
    d[q] = dx * dx + fx[v[k]];
  }
}

}  // namespace

double dice_score(const LabelVolume& pred, const LabelVolume& truth, int class_id) {
  check_metric_inputs(pred, truth, class_id);
  std::int64_t np = 0, ng = 0, inter = 0;
  const auto c = static_cast<std::uint8_t>(class_id);
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    const bool p = pred.data()[i] == c;
    const bool g = truth.data()[i] == c;
    np += p;
    ng += g;
    inter += p && g;
  }
  if (np + ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

std::vector<std::int64_t> boundary_voxels(const LabelVolume& lbl, int class_id) {
  const auto [nx, ny, nz] = lbl.dims();
  const auto c = static_cast<std::uint8_t>(class_id);
  std::vector<std::int64_t> out;
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        const std::int64_t idx = flat_index(lbl.dims(), x, y, z);
        if (lbl.data()[static_cast<std::size_t>(idx)] != c) continue;
        const bool border = x == 0 || x == nx - 1 || y == 0 || y == ny - 1 || z == 0 ||
                            z == nz - 1;
        bool exposed = border;
        if (!exposed) {
          exposed = lbl.at(x - 1, y, z) != c || lbl.at(x + 1, y, z) != c ||
                    lbl.at(x, y - 1, z) != c || lbl.at(x, y + 1, z) != c ||
                    lbl.at(x, y, z - 1) != c || lbl.at(x, y, z + 1) != c;
        }
        if (exposed) out.push_back(idx);
      }
    }
  }
  return out;
}

std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& seeds,
                                               const Dims& dims, const Spacing& spacing) {
  const auto [nx, ny, nz] = dims;
  if (static_cast<std::int64_t>(seeds.size()) != voxel_count(dims)) {
    throw ShapeError("seed mask size does not match dims");
  }
  std::vector<double> dist(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) dist[i] = seeds[i] ? 0.0 : kInf;

  const std::int64_t n_max = std::max({nx, ny, nz});
  std::vector<double> f(static_cast<std::size_t>(n_max)), d(static_cast<std::size_t>(n_max)),
      zbuf(static_cast<std::size_t>(n_max + 1)), fx(static_cast<std::size_t>(n_max));
  std::vector<std::int64_t> vbuf(static_cast<std::size_t>(n_max));

  // x pass
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      double* line = dist.data() + (y + z * ny) * nx;
      edt_1d(line, d.data(), nx, spacing[0], vbuf.data(), zbuf.data(), fx.data());
      std::copy_n(d.data(), nx, line);
    }
  }
  // y pass
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t x = 0; x < nx; ++x) {
      for (std::int64_t y = 0; y < ny; ++y) f[static_cast<std::size_t>(y)] = dist[
          static_cast<std::size_t>(flat_index(dims, x, y, z))];
      edt_1d(f.data(), d.data(), ny, spacing[1], vbuf.data(), zbuf.data(), fx.data());
      for (std::int64_t y = 0; y < ny; ++y) {
        dist[static_cast<std::size_t>(flat_index(dims, x, y, z))] =
            d[static_cast<std::size_t>(y)];
      }
    }
  }
  // z pass
  for (std::int64_t y = 0; y < ny; ++y) {
    for (std::int64_t x = 0; x < nx; ++x) {
      for (std::int64_t z = 0; z < nz; ++z) f[static_cast<std::size_t>(z)] = dist[
          static_cast<std::size_t>(flat_index(dims, x, y, z))];
      edt_1d(f.data(), d.data(), nz, spacing[2], vbuf.data(), zbuf.data(), fx.data());
      for (std::int64_t z = 0; z < nz; ++z) {
        dist[static_cast<std::size_t>(flat_index(dims, x, y, z))] =
            d[static_cast<std::size_t>(z)];
      }
    }
  }
  return dist;
}

double assd(const LabelVolume& pred, const LabelVolume& truth, int class_id) {
  check_metric_inputs(pred, truth, class_id);
  if (pred.spacing() != truth.spacing()) {
    throw ShapeError("pred and truth spacing differ");
  }
  const auto bp = boundary_voxels(pred, class_id);
  const auto bg = boundary_voxels(truth, class_id);
  if (bp.empty() || bg.empty()) {
    throw UndefinedMetricError("ASSD undefined: class " + std::to_string(class_id) +
                               " mask is empty on " + (bp.empty() ? "pred" : "truth"));
  }

  const Dims dims = pred.dims();
  auto seed_mask = [&](const std::vector<std::int64_t>& idx) {
    std::vector<std::uint8_t> m(static_cast<std::size_t>(voxel_count(dims)), 0);
    for (const auto i : idx) m[static_cast<std::size_t>(i)] = 1;
    return m;
  };
  const auto dist_to_g = squared_distance_transform(seed_mask(bg), dims, pred.spacing());
  const auto dist_to_p = squared_distance_transform(seed_mask(bp), dims, pred.spacing());

  const double sum_p = pairwise_sum(bp.size(), [&](std::size_t i) {
    return std::sqrt(dist_to_g[static_cast<std::size_t>(bp[i])]);
  });
  const double sum_g = pairwise_sum(bg.size(), [&](std::size_t i) {
    return std::sqrt(dist_to_p[static_cast<std::size_t>(bg[i])]);
  });
  return (sum_p + sum_g) / static_cast<double>(bp.size() + bg.size());
}

void FeatureStats::validate() const {
  const std::size_t d = mean.size();
  if (d == 0) throw ParamError("feature stats need dimension >= 1");
  if (covariance.size() != d * d) throw ShapeError("covariance is not d x d");
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (std::abs(covariance[i * d + j] - covariance[j * d + i]) > 1e-8) {
        throw ValidationError("covariance asymmetry exceeds 1e-8");
      }
    }
  }
}

FeatureStats feature_stats(const std::vector<double>& features, std::int64_t rows,
                           std::int64_t cols) {
  if (rows < 2) throw ParamError("feature statistics need at least 2 samples");
  if (cols < 1 || static_cast<std::int64_t>(features.size()) != rows * cols) {
    throw ShapeError("feature matrix size does not match rows * cols");
  }
  FeatureStats st;
  st.count = rows;
  st.mean.assign(static_cast<std::size_t>(cols), 0.0);
  const auto n = static_cast<std::size_t>(rows);
  const auto d = static_cast<std::size_t>(cols);
  for (std::size_t j = 0; j < d; ++j) {
    st.mean[j] = pairwise_sum(n, [&](std::size_t i) { return features[i * d + j]; }) /
                 static_cast<double>(n);
  }
  st.covariance.assign(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = j; k < d; ++k) {
      const double cjk = pairwise_sum(n, [&](std::size_t i) {
                           return (features[i * d + j] - st.mean[j]) *
                                  (features[i * d + k] - st.mean[k]);
                         }) /
                         static_cast<double>(rows - 1);
      st.covariance[j * d + k] = cjk;
      st.covariance[k * d + j] = cjk;
    }
  }
  return st;
}

double frechet_distance(const FeatureStats& a, const FeatureStats& b) {
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) {
    throw ShapeError("feature dimensions differ: " + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()));
  }
  const auto d = static_cast<Eigen::Index>(a.dim());
  using Mat = Eigen::MatrixXd;
  const Eigen::Map<const Mat> sa(a.covariance.data(), d, d);
  const Eigen::Map<const Mat> sb(b.covariance.data(), d, d);

  const double psd_tol = 1e-6;
  auto check_psd = [&](const Eigen::VectorXd& ev, const char* what) {
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -psd_tol * scale) {
      throw NumericError(std::string(what) + " is indefinite beyond tolerance");
    }
  };

  Eigen::SelfAdjointEigenSolver<Mat> eig_b(sb);
  if (eig_b.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  check_psd(eig_b.eigenvalues(), "covariance b");
  const Mat sqrt_b = eig_b.eigenvectors() *
                     eig_b.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                     eig_b.eigenvectors().transpose();

  // (Sigma_a Sigma_b)^{1/2} has the trace of (B^{1/2} A B^{1/2})^{1/2}, and
  // the latter is symmetric PSD, so one self-adjoint solve suffices.
  Mat prod = sqrt_b * sa * sqrt_b;
  prod = 0.5 * (prod + prod.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig_p(prod);
  if (eig_p.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  check_psd(eig_p.eigenvalues(), "covariance product");
  const double tr_sqrt = eig_p.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }
  const double value = mean_term + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
  if (value < -psd_tol) {
    throw NumericError("Frechet distance evaluated below -1e-6");
  }
  return std::max(0.0, value);
}

std::vector<double> read_feature_csv(const std::string& path, std::int64_t* rows,
                                     std::int64_t* cols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> values;
  std::string line;
  std::int64_t r = 0, c = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::int64_t this_c = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("non-numeric cell \"" + cell + "\" in " + path + " line " +
                          std::to_string(r + 1));
      }
      ++this_c;
    }
    if (c >= 0 && this_c != c) {
      throw FormatError("ragged CSV: line " + std::to_string(r + 1) + " has " +
                        std::to_string(this_c) + " columns, expected " + std::to_string(c));
    }
    c = this_c;
    ++r;
  }
  if (r == 0) throw FormatError("empty feature CSV: " + path);
  *rows = r;
  *cols = c;
  return values;
}

std::string metrics_report(const std::vector<std::string>& pred_paths,
                           const std::vector<std::string>& truth_paths,
                           const std::vector<int>& classes,
                           const std::string& out_path) {
  if (pred_paths.size() != truth_paths.size() || pred_paths.empty()) {
    throw ParamError("need matching, non-empty lists of prediction and truth paths");
  }
  nlohmann::ordered_json report;
  report["cases"] = nlohmann::ordered_json::array();

  std::vector<std::vector<double>> dices(classes.size());
  std::vector<std::vector<double>> assds(classes.size());

  for (std::size_t i = 0; i < pred_paths.size(); ++i) {
    const LabelVolume pred = read_label(pred_paths[i]);
    const LabelVolume truth = read_label(truth_paths[i]);
    nlohmann::ordered_json entry;
    entry["pred"] = pred_paths[i];
    entry["truth"] = truth_paths[i];
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
      const int cls = classes[ci];
      nlohmann::ordered_json m;
      const double dsc = dice_score(pred, truth, cls);
      m["dice"] = dsc;
      dices[ci].push_back(dsc);
      try {
        const double sd = assd(pred, truth, cls);
        m["assd_mm"] = sd;
        assds[ci].push_back(sd);
      } catch (const UndefinedMetricError&) {
        m["assd_mm"] = nullptr;  // missing, not zero
      }
      entry["class_" + std::to_string(cls)] = m;
    }
    report["cases"].push_back(entry);
  }

  auto mean_std = [](const std::vector<double>& v) {
    nlohmann::ordered_json j;
    if (v.empty()) {
      j["mean"] = nullptr;
      j["std"] = nullptr;
      j["n"] = 0;
      return j;
    }
    const double mean = pairwise_sum(v.size(), [&](std::size_t i) { return v[i]; }) /
                        static_cast<double>(v.size());
    const double var = pairwise_sum(v.size(), [&](std::size_t i) {
                         return (v[i] - mean) * (v[i] - mean);
                       }) /
                       static_cast<double>(v.size());
    j["mean"] = mean;
    j["std"] = std::sqrt(var);
    j["n"] = v.size();
    return j;
  };

  nlohmann::ordered_json summary;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    nlohmann::ordered_json cls_summary;
    cls_summary["dice"] = mean_std(dices[ci]);
    cls_summary["assd_mm"] = mean_std(assds[ci]);
    summary["class_" + std::to_string(classes[ci])] = cls_summary;
  }
  report["summary"] = summary;

  const std::string text = report.dump(2) + "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + out_path + " for writing");
    out << text;
    if (!out) throw IoError("short write on " + out_path);
  }
  return text;
}

}  // namespace vsseg
