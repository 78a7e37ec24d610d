/* vsseg - weakly-supervised cross-modality segmentation toolkit.
 *
 * C API of the shared library. All objects are opaque handles created and
 * destroyed by the library; every fallible call returns a vsseg_status and
 * leaves a thread-local message retrievable with vsseg_last_error().
 *
 * Volumes are dense 3D grids (x fastest) with mm voxel spacing; labels use
 * 0 = background, 1 = vestibular schwannoma, 2 = cochlea; probability maps
 * are class-major float grids exchanged as 4D NIfTI files.
 */
#ifndef VSSEG_H
#define VSSEG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vsseg_status {
  VSSEG_OK = 0,
  VSSEG_ERR_IO = 1,
  VSSEG_ERR_FORMAT = 2,
  VSSEG_ERR_UNSUPPORTED = 3,
  VSSEG_ERR_DIMENSION = 4,
  VSSEG_ERR_SHAPE = 5,
  VSSEG_ERR_PARAM = 6,
  VSSEG_ERR_VALIDATION = 7,
  VSSEG_ERR_NUMERIC = 8,
  VSSEG_ERR_DEPENDENCY = 9,
  VSSEG_ERR_RUNNER = 10,
  VSSEG_ERR_RANGE = 11,
  VSSEG_ERR_UNDEFINED_METRIC = 12,
  VSSEG_ERR_INTERNAL = 13
} vsseg_status;

typedef struct vsseg_volume vsseg_volume;    /* float32 intensities */
typedef struct vsseg_label vsseg_label;      /* uint8 class ids */
typedef struct vsseg_probmap vsseg_probmap;  /* class-major float32 */

/* Message for the most recent failure on this thread. */
const char* vsseg_last_error(void);
const char* vsseg_status_name(vsseg_status status);
const char* vsseg_version(void);

void vsseg_volume_destroy(vsseg_volume* vol);
void vsseg_label_destroy(vsseg_label* lbl);
void vsseg_probmap_destroy(vsseg_probmap* map);

/* ---- NIfTI-1 I/O (single-file, optional .gz) ---------------------------- */

vsseg_status vsseg_volume_read(const char* path, vsseg_volume** out);
vsseg_status vsseg_label_read(const char* path, vsseg_label** out);
vsseg_status vsseg_probmap_read(const char* path, vsseg_probmap** out);
vsseg_status vsseg_volume_write(const vsseg_volume* vol, const char* path);
vsseg_status vsseg_label_write(const vsseg_label* lbl, const char* path);
vsseg_status vsseg_probmap_write(const vsseg_probmap* map, const char* path);

/* ---- construction and accessors ----------------------------------------- */

vsseg_status vsseg_volume_create(const int64_t dims[3], const double spacing_mm[3],
                                 const float* data, vsseg_volume** out);
vsseg_status vsseg_label_create(const int64_t dims[3], const double spacing_mm[3],
                                const uint8_t* data, vsseg_label** out);
vsseg_status vsseg_probmap_create(int num_classes, const int64_t dims[3],
                                  const double spacing_mm[3], const float* data,
                                  vsseg_probmap** out);

void vsseg_volume_dims(const vsseg_volume* vol, int64_t dims[3]);
void vsseg_volume_spacing(const vsseg_volume* vol, double spacing_mm[3]);
const float* vsseg_volume_data(const vsseg_volume* vol);
void vsseg_label_dims(const vsseg_label* lbl, int64_t dims[3]);
void vsseg_label_spacing(const vsseg_label* lbl, double spacing_mm[3]);
const uint8_t* vsseg_label_data(const vsseg_label* lbl);
void vsseg_probmap_dims(const vsseg_probmap* map, int64_t dims[3]);
int vsseg_probmap_num_classes(const vsseg_probmap* map);
const float* vsseg_probmap_data(const vsseg_probmap* map);

/* ---- preprocessing ------------------------------------------------------- */

/* order: 0 nearest, 1 trilinear, 3 cubic B-spline (prefiltered). */
vsseg_status vsseg_volume_resample(const vsseg_volume* vol, const double target_mm[3],
                                   int order, vsseg_volume** out);
vsseg_status vsseg_label_resample(const vsseg_label* lbl, const double target_mm[3],
                                  vsseg_label** out);
vsseg_status vsseg_volume_crop_pad_xy(const vsseg_volume* vol, int64_t target_x,
                                      int64_t target_y, vsseg_volume** out);
vsseg_status vsseg_label_crop_pad_xy(const vsseg_label* lbl, int64_t target_x,
                                     int64_t target_y, vsseg_label** out);
/* Whole-volume z-score (population std); fails on constant volumes. */
vsseg_status vsseg_volume_normalize(const vsseg_volume* vol, vsseg_volume** out);

/* ---- augmentation -------------------------------------------------------- */

/* kind: rotate | noise | scale | translate | contrast | flip_x | flip_y |
 * flip_z. Deterministic in (volume, kind, seed); parameter ranges are the
 * documented defaults. */
vsseg_status vsseg_volume_augment(const vsseg_volume* vol, const char* kind,
                                  uint64_t seed, vsseg_volume** out);
/* Spatial kinds only; same geometry as vsseg_volume_augment for the seed. */
vsseg_status vsseg_label_augment(const vsseg_label* lbl, const char* kind, uint64_t seed,
                                 vsseg_label** out);
vsseg_status vsseg_reduce_tumor(const vsseg_volume* vol, const vsseg_label* lbl,
                                double factor, vsseg_volume** out);

/* ---- losses --------------------------------------------------------------- */

/* kind: dice | ce | combined. value_out receives the loss (dice as written,
 * cross-entropy as mean over voxels); raw_out (nullable) the undivided
 * cross-entropy sum. grad_path (nullable) writes the voxelwise gradient as a
 * 4D float NIfTI. */
vsseg_status vsseg_loss_eval(const char* pred_path, const char* target_path,
                             const char* kind, double epsilon, double w_dice, double w_ce,
                             const char* grad_path, double* value_out, double* raw_out);
/* Weighted 2^-k aggregation of per-level losses, weights normalized. */
vsseg_status vsseg_deep_supervision(const double* level_losses, size_t num_levels,
                                    int exclude_deepest, double* out);

/* ---- metrics -------------------------------------------------------------- */

vsseg_status vsseg_dice_score(const vsseg_label* pred, const vsseg_label* truth,
                              int class_id, double* out);
/* Average symmetric surface distance (mm); VSSEG_ERR_UNDEFINED_METRIC when a
 * mask is empty for the class. */
vsseg_status vsseg_assd(const vsseg_label* pred, const vsseg_label* truth, int class_id,
                        double* out);
/* Frechet distance between Gaussian fits of two feature CSVs (one vector per
 * row). */
vsseg_status vsseg_fid_from_csv(const char* features_a_csv, const char* features_b_csv,
                                double* out);
/* Per-case dice/ASSD plus mean/std summary; report JSON is written to
 * out_json_path (nullable) and returned via report_out (free with
 * vsseg_string_free). */
vsseg_status vsseg_metrics_report(const char* const* pred_paths,
                                  const char* const* truth_paths, size_t num_cases,
                                  const int* classes, size_t num_classes,
                                  const char* out_json_path, char** report_out);

/* ---- post-processing and ensembling --------------------------------------- */

vsseg_status vsseg_keep_largest_component(const vsseg_label* pred, int class_id,
                                          vsseg_label** out);
vsseg_status vsseg_ensemble(const vsseg_probmap* const* maps, size_t num_maps,
                            const double* weights, vsseg_probmap** out);
vsseg_status vsseg_argmax_labels(const vsseg_probmap* map, vsseg_label** out);

/* ---- self-training pipeline ------------------------------------------------ */

/* Builds the manifest for round 1, 2 or 3 from a pools JSON file. `created`
 * (nullable) stamps the manifest; pass a fixed value for byte-identical
 * output. */
vsseg_status vsseg_assemble_round(int round, const char* pools_json_path,
                                  const char* created, const char* out_manifest_path);
/* Runs `runner_template` ({manifest}/{outdir} substituted) in mode "train" or
 * "predict". Predict validates <case>_prob.nii[.gz] maps, then writes
 * <case>_pseudo.nii.gz pseudo-labels (argmax, optionally largest-VS-component)
 * and an index pseudo_labels.json. summary_out (nullable) receives a JSON
 * summary. */
vsseg_status vsseg_run_model(const char* manifest_path, const char* runner_template,
                             const char* mode, const char* outdir, int postprocess,
                             char** summary_out);
vsseg_status vsseg_lr_stage_defaults(int stage, double* base_lr, int* epochs_const,
                                     int* epochs_decay);
vsseg_status vsseg_lr_at_epoch(double base_lr, int epochs_const, int epochs_decay,
                               int epoch, double* out);

void vsseg_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VSSEG_H */
