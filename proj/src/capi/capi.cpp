#include "vsseg.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "core/augment.hpp"
#include "core/ensemble.hpp"
#include "core/losses.hpp"
#include "core/metrics.hpp"
#include "core/nifti.hpp"
#include "core/pipeline.hpp"
#include "core/postprocess.hpp"
#include "core/preprocess.hpp"

#include "json.hpp"

struct vsseg_volume {
  vsseg::Volume v;
};
struct vsseg_label {
  vsseg::LabelVolume v;
};
struct vsseg_probmap {
  vsseg::ProbabilityMap v;
};

namespace {

thread_local std::string g_last_error;

vsseg_status status_from(const vsseg::Error& e) {
  return static_cast<vsseg_status>(static_cast<int>(e.code()));
}

// Runs fn, translating exceptions into status codes + the thread-local
// message. fn performs the whole operation including output assignment.
template <typename Fn>
vsseg_status guard(Fn&& fn) {
  try {
    fn();
    return VSSEG_OK;
  } catch (const vsseg::RunnerError& e) {
    g_last_error = std::string(e.what());
    if (!e.captured_output.empty()) g_last_error += "\n--- runner output ---\n" + e.captured_output;
    return VSSEG_ERR_RUNNER;
  } catch (const vsseg::Error& e) {
    g_last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VSSEG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return VSSEG_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw vsseg::ParamError(std::string("null argument: ") + what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

vsseg::Dims to_dims(const int64_t d[3]) { return {d[0], d[1], d[2]}; }
vsseg::Spacing to_spacing(const double s[3]) { return {s[0], s[1], s[2]}; }

}  // namespace

extern "C" {

const char* vsseg_last_error(void) { return g_last_error.c_str(); }

const char* vsseg_status_name(vsseg_status status) {
  switch (status) {
    case VSSEG_OK: return "ok";
    case VSSEG_ERR_IO: return "io";
    case VSSEG_ERR_FORMAT: return "format";
    case VSSEG_ERR_UNSUPPORTED: return "unsupported";
    case VSSEG_ERR_DIMENSION: return "dimension";
    case VSSEG_ERR_SHAPE: return "shape";
    case VSSEG_ERR_PARAM: return "param";
    case VSSEG_ERR_VALIDATION: return "validation";
    case VSSEG_ERR_NUMERIC: return "numeric";
    case VSSEG_ERR_DEPENDENCY: return "dependency";
    case VSSEG_ERR_RUNNER: return "runner";
    case VSSEG_ERR_RANGE: return "range";
    case VSSEG_ERR_UNDEFINED_METRIC: return "undefined-metric";
    default: return "internal";
  }
}

const char* vsseg_version(void) { return "0.1.0"; }

void vsseg_volume_destroy(vsseg_volume* vol) { delete vol; }
void vsseg_label_destroy(vsseg_label* lbl) { delete lbl; }
void vsseg_probmap_destroy(vsseg_probmap* map) { delete map; }
void vsseg_string_free(char* s) { std::free(s); }

vsseg_status vsseg_volume_read(const char* path, vsseg_volume** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "path/out");
    *out = new vsseg_volume{vsseg::read_volume(path)};
  });
}

vsseg_status vsseg_label_read(const char* path, vsseg_label** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "path/out");
    *out = new vsseg_label{vsseg::read_label(path)};
  });
}

vsseg_status vsseg_probmap_read(const char* path, vsseg_probmap** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "path/out");
    *out = new vsseg_probmap{vsseg::read_probability_map(path)};
  });
}

vsseg_status vsseg_volume_write(const vsseg_volume* vol, const char* path) {
  return guard([&] {
    require(vol != nullptr && path != nullptr, "vol/path");
    vsseg::write_nifti(vol->v, path);
  });
}

vsseg_status vsseg_label_write(const vsseg_label* lbl, const char* path) {
  return guard([&] {
    require(lbl != nullptr && path != nullptr, "lbl/path");
    vsseg::write_nifti(lbl->v, path);
  });
}

vsseg_status vsseg_probmap_write(const vsseg_probmap* map, const char* path) {
  return guard([&] {
    require(map != nullptr && path != nullptr, "map/path");
    vsseg::write_nifti(map->v, path);
  });
}

vsseg_status vsseg_volume_create(const int64_t dims[3], const double spacing_mm[3],
                                 const float* data, vsseg_volume** out) {
  return guard([&] {
    require(dims != nullptr && spacing_mm != nullptr && data != nullptr && out != nullptr,
            "dims/spacing/data/out");
    const auto d = to_dims(dims);
    std::vector<float> v(data, data + vsseg::voxel_count(d));
    *out = new vsseg_volume{vsseg::Volume(d, to_spacing(spacing_mm), std::move(v))};
  });
}

vsseg_status vsseg_label_create(const int64_t dims[3], const double spacing_mm[3],
                                const uint8_t* data, vsseg_label** out) {
  return guard([&] {
    require(dims != nullptr && spacing_mm != nullptr && data != nullptr && out != nullptr,
            "dims/spacing/data/out");
    const auto d = to_dims(dims);
    std::vector<uint8_t> v(data, data + vsseg::voxel_count(d));
    *out = new vsseg_label{vsseg::LabelVolume(d, to_spacing(spacing_mm), std::move(v))};
  });
}

vsseg_status vsseg_probmap_create(int num_classes, const int64_t dims[3],
                                  const double spacing_mm[3], const float* data,
                                  vsseg_probmap** out) {
  return guard([&] {
    require(dims != nullptr && spacing_mm != nullptr && data != nullptr && out != nullptr,
            "dims/spacing/data/out");
    const auto d = to_dims(dims);
    std::vector<float> v(data, data + vsseg::voxel_count(d) * num_classes);
    *out = new vsseg_probmap{
        vsseg::ProbabilityMap(num_classes, d, to_spacing(spacing_mm), std::move(v))};
  });
}

void vsseg_volume_dims(const vsseg_volume* vol, int64_t dims[3]) {
  for (int a = 0; a < 3; ++a) dims[a] = vol->v.dims()[a];
}
void vsseg_volume_spacing(const vsseg_volume* vol, double spacing_mm[3]) {
  for (int a = 0; a < 3; ++a) spacing_mm[a] = vol->v.spacing()[a];
}
const float* vsseg_volume_data(const vsseg_volume* vol) { return vol->v.data().data(); }

void vsseg_label_dims(const vsseg_label* lbl, int64_t dims[3]) {
  for (int a = 0; a < 3; ++a) dims[a] = lbl->v.dims()[a];
}
void vsseg_label_spacing(const vsseg_label* lbl, double spacing_mm[3]) {
  for (int a = 0; a < 3; ++a) spacing_mm[a] = lbl->v.spacing()[a];
}
const uint8_t* vsseg_label_data(const vsseg_label* lbl) { return lbl->v.data().data(); }

void vsseg_probmap_dims(const vsseg_probmap* map, int64_t dims[3]) {
  for (int a = 0; a < 3; ++a) dims[a] = map->v.dims()[a];
}
int vsseg_probmap_num_classes(const vsseg_probmap* map) { return map->v.num_classes(); }
const float* vsseg_probmap_data(const vsseg_probmap* map) { return map->v.data().data(); }

vsseg_status vsseg_volume_resample(const vsseg_volume* vol, const double target_mm[3],
                                   int order, vsseg_volume** out) {
  return guard([&] {
    require(vol != nullptr && target_mm != nullptr && out != nullptr, "vol/target/out");
    vsseg::ResampleSpec spec;
    spec.target_spacing = to_spacing(target_mm);
    spec.image_order = order;
    *out = new vsseg_volume{vsseg::resample_image(vol->v, spec)};
  });
}

vsseg_status vsseg_label_resample(const vsseg_label* lbl, const double target_mm[3],
                                  vsseg_label** out) {
  return guard([&] {
    require(lbl != nullptr && target_mm != nullptr && out != nullptr, "lbl/target/out");
    vsseg::ResampleSpec spec;
    spec.target_spacing = to_spacing(target_mm);
    *out = new vsseg_label{vsseg::resample_label(lbl->v, spec)};
  });
}

vsseg_status vsseg_volume_crop_pad_xy(const vsseg_volume* vol, int64_t target_x,
                                      int64_t target_y, vsseg_volume** out) {
  return guard([&] {
    require(vol != nullptr && out != nullptr, "vol/out");
    *out = new vsseg_volume{vsseg::crop_or_pad_xy(vol->v, target_x, target_y)};
  });
}

vsseg_status vsseg_label_crop_pad_xy(const vsseg_label* lbl, int64_t target_x,
                                     int64_t target_y, vsseg_label** out) {
  return guard([&] {
    require(lbl != nullptr && out != nullptr, "lbl/out");
    *out = new vsseg_label{vsseg::crop_or_pad_xy(lbl->v, target_x, target_y)};
  });
}

vsseg_status vsseg_volume_normalize(const vsseg_volume* vol, vsseg_volume** out) {
  return guard([&] {
    require(vol != nullptr && out != nullptr, "vol/out");
    *out = new vsseg_volume{vsseg::normalize_3d(vol->v)};
  });
}

vsseg_status vsseg_volume_augment(const vsseg_volume* vol, const char* kind, uint64_t seed,
                                  vsseg_volume** out) {
  return guard([&] {
    require(vol != nullptr && kind != nullptr && out != nullptr, "vol/kind/out");
    vsseg::AugmentationSpec spec;
    spec.kind = vsseg::augmentation_kind_from_string(kind);
    spec.seed = seed;
    *out = new vsseg_volume{vsseg::apply_augmentation(vol->v, spec)};
  });
}

vsseg_status vsseg_label_augment(const vsseg_label* lbl, const char* kind, uint64_t seed,
                                 vsseg_label** out) {
  return guard([&] {
    require(lbl != nullptr && kind != nullptr && out != nullptr, "lbl/kind/out");
    vsseg::AugmentationSpec spec;
    spec.kind = vsseg::augmentation_kind_from_string(kind);
    spec.seed = seed;
    *out = new vsseg_label{vsseg::apply_spatial_to_label(lbl->v, spec)};
  });
}

vsseg_status vsseg_reduce_tumor(const vsseg_volume* vol, const vsseg_label* lbl,
                                double factor, vsseg_volume** out) {
  return guard([&] {
    require(vol != nullptr && lbl != nullptr && out != nullptr, "vol/lbl/out");
    *out = new vsseg_volume{vsseg::reduce_tumor_signal(vol->v, lbl->v, factor)};
  });
}

vsseg_status vsseg_loss_eval(const char* pred_path, const char* target_path,
                             const char* kind, double epsilon, double w_dice, double w_ce,
                             const char* grad_path, double* value_out, double* raw_out) {
  return guard([&] {
    require(pred_path != nullptr && target_path != nullptr && kind != nullptr &&
                value_out != nullptr,
            "pred/target/kind/value_out");
    const vsseg::ProbabilityMap pred = vsseg::read_probability_map(pred_path);
    const vsseg::LabelVolume target = vsseg::read_label(target_path);
    const vsseg::LossInput input = vsseg::make_loss_input(pred, target);

    vsseg::LossResult res;
    const std::string k = kind;
    if (k == "dice") {
      res = vsseg::dice_loss(input, epsilon);
    } else if (k == "ce") {
      res = vsseg::cross_entropy_loss(input);
    } else if (k == "combined") {
      res = vsseg::combined_loss(input, epsilon, w_dice, w_ce);
    } else {
      throw vsseg::ParamError("loss kind must be dice, ce or combined");
    }
    *value_out = res.value;
    if (raw_out != nullptr) *raw_out = res.raw;
    if (grad_path != nullptr) {
      std::vector<float> grad(res.gradient.begin(), res.gradient.end());
      vsseg::write_nifti_4d(pred.dims(), pred.num_classes(), pred.spacing(), grad,
                            pred.meta(), grad_path);
    }
  });
}

vsseg_status vsseg_deep_supervision(const double* level_losses, size_t num_levels,
                                    int exclude_deepest, double* out) {
  return guard([&] {
    require(level_losses != nullptr && out != nullptr, "level_losses/out");
    std::vector<double> levels(level_losses, level_losses + num_levels);
    *out = vsseg::deep_supervision_aggregate(levels, exclude_deepest != 0);
  });
}

vsseg_status vsseg_dice_score(const vsseg_label* pred, const vsseg_label* truth,
                              int class_id, double* out) {
  return guard([&] {
    require(pred != nullptr && truth != nullptr && out != nullptr, "pred/truth/out");
    *out = vsseg::dice_score(pred->v, truth->v, class_id);
  });
}

vsseg_status vsseg_assd(const vsseg_label* pred, const vsseg_label* truth, int class_id,
                        double* out) {
  return guard([&] {
    require(pred != nullptr && truth != nullptr && out != nullptr, "pred/truth/out");
    *out = vsseg::assd(pred->v, truth->v, class_id);
  });
}

vsseg_status vsseg_fid_from_csv(const char* features_a_csv, const char* features_b_csv,
                                double* out) {
  return guard([&] {
    require(features_a_csv != nullptr && features_b_csv != nullptr && out != nullptr,
            "a/b/out");
    int64_t ra = 0, ca = 0, rb = 0, cb = 0;
    const auto fa = vsseg::read_feature_csv(features_a_csv, &ra, &ca);
    const auto fb = vsseg::read_feature_csv(features_b_csv, &rb, &cb);
    const auto sa = vsseg::feature_stats(fa, ra, ca);
    const auto sb = vsseg::feature_stats(fb, rb, cb);
    *out = vsseg::frechet_distance(sa, sb);
  });
}

vsseg_status vsseg_metrics_report(const char* const* pred_paths,
                                  const char* const* truth_paths, size_t num_cases,
                                  const int* classes, size_t num_classes,
                                  const char* out_json_path, char** report_out) {
  return guard([&] {
    require(pred_paths != nullptr && truth_paths != nullptr && classes != nullptr,
            "paths/classes");
    std::vector<std::string> preds(pred_paths, pred_paths + num_cases);
    std::vector<std::string> truths(truth_paths, truth_paths + num_cases);
    std::vector<int> cls(classes, classes + num_classes);
    const std::string report = vsseg::metrics_report(
        preds, truths, cls, out_json_path != nullptr ? out_json_path : "");
    if (report_out != nullptr) *report_out = dup_string(report);
  });
}

vsseg_status vsseg_keep_largest_component(const vsseg_label* pred, int class_id,
                                          vsseg_label** out) {
  return guard([&] {
    require(pred != nullptr && out != nullptr, "pred/out");
    *out = new vsseg_label{vsseg::keep_largest_component(pred->v, class_id)};
  });
}

vsseg_status vsseg_ensemble(const vsseg_probmap* const* maps, size_t num_maps,
                            const double* weights, vsseg_probmap** out) {
  return guard([&] {
    require(maps != nullptr && out != nullptr, "maps/out");
    std::vector<const vsseg::ProbabilityMap*> ptrs;
    ptrs.reserve(num_maps);
    for (size_t i = 0; i < num_maps; ++i) {
      require(maps[i] != nullptr, "maps[i]");
      ptrs.push_back(&maps[i]->v);
    }
    std::vector<double> w;
    if (weights != nullptr) w.assign(weights, weights + num_maps);
    *out = new vsseg_probmap{vsseg::ensemble_probs(ptrs, w)};
  });
}

vsseg_status vsseg_argmax_labels(const vsseg_probmap* map, vsseg_label** out) {
  return guard([&] {
    require(map != nullptr && out != nullptr, "map/out");
    *out = new vsseg_label{vsseg::argmax_labels(map->v)};
  });
}

vsseg_status vsseg_assemble_round(int round, const char* pools_json_path,
                                  const char* created, const char* out_manifest_path) {
  return guard([&] {
    require(pools_json_path != nullptr && out_manifest_path != nullptr, "pools/out");
    const vsseg::CasePools pools = vsseg::read_pools(pools_json_path);
    const vsseg::DatasetManifest manifest =
        vsseg::assemble_round(round, pools, created != nullptr ? created : "");
    vsseg::write_manifest(manifest, out_manifest_path);
  });
}

vsseg_status vsseg_run_model(const char* manifest_path, const char* runner_template,
                             const char* mode, const char* outdir, int postprocess,
                             char** summary_out) {
  return guard([&] {
    require(manifest_path != nullptr && runner_template != nullptr && mode != nullptr &&
                outdir != nullptr,
            "manifest/runner/mode/outdir");
    const vsseg::RunnerResult res =
        vsseg::run_model(manifest_path, runner_template, mode, outdir, postprocess != 0);
    if (summary_out != nullptr) {
      nlohmann::ordered_json j;
      j["exit_code"] = res.exit_code;
      j["outdir"] = res.outdir;
      j["predictions"] = nlohmann::ordered_json::array();
      for (const auto& p : res.predictions) {
        j["predictions"].push_back({{"case_id", p.case_id},
                                    {"prob_path", p.prob_path},
                                    {"pseudo_label_path", p.pseudo_label_path}});
      }
      *summary_out = dup_string(j.dump(2) + "\n");
    }
  });
}

vsseg_status vsseg_lr_stage_defaults(int stage, double* base_lr, int* epochs_const,
                                     int* epochs_decay) {
  return guard([&] {
    require(base_lr != nullptr && epochs_const != nullptr && epochs_decay != nullptr,
            "outputs");
    const vsseg::ScheduleSpec spec = vsseg::stage_defaults(stage);
    *base_lr = spec.base_lr;
    *epochs_const = spec.epochs_const;
    *epochs_decay = spec.epochs_decay;
  });
}

vsseg_status vsseg_lr_at_epoch(double base_lr, int epochs_const, int epochs_decay,
                               int epoch, double* out) {
  return guard([&] {
    require(out != nullptr, "out");
    *out = vsseg::lr_at_epoch({base_lr, epochs_const, epochs_decay}, epoch);
  });
}

} /* extern "C" */
