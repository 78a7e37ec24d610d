// vsseg command-line front end. Everything goes through the C API of the
// shared library; this file only parses arguments and moves handles around.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vsseg.h"

namespace {

struct VolumeDeleter {
  void operator()(vsseg_volume* v) const { vsseg_volume_destroy(v); }
};
struct LabelDeleter {
  void operator()(vsseg_label* l) const { vsseg_label_destroy(l); }
};
struct ProbmapDeleter {
  void operator()(vsseg_probmap* p) const { vsseg_probmap_destroy(p); }
};
using VolumePtr = std::unique_ptr<vsseg_volume, VolumeDeleter>;
using LabelPtr = std::unique_ptr<vsseg_label, LabelDeleter>;
using ProbmapPtr = std::unique_ptr<vsseg_probmap, ProbmapDeleter>;

[[noreturn]] void fail(vsseg_status status) {
  std::fprintf(stderr, "vsseg: error (%s): %s\n", vsseg_status_name(status),
               vsseg_last_error());
  std::exit(1);
}

void check(vsseg_status status) {
  if (status != VSSEG_OK) fail(status);
}

std::string now_utc() {
  char buf[32];
  const std::time_t t = std::time(nullptr);
  std::tm tm;
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run_preprocess(const std::string& in, const std::string& out, bool is_label,
                   const std::vector<double>& spacing, const std::vector<int64_t>& xy,
                   bool normalize) {
  if (is_label) {
    vsseg_label* raw = nullptr;
    check(vsseg_label_read(in.c_str(), &raw));
    LabelPtr lbl(raw);
    if (!spacing.empty()) {
      const double target[3] = {spacing[0], spacing[1], spacing[2]};
      vsseg_label* next = nullptr;
      check(vsseg_label_resample(lbl.get(), target, &next));
      lbl.reset(next);
    }
    if (!xy.empty()) {
      vsseg_label* next = nullptr;
      check(vsseg_label_crop_pad_xy(lbl.get(), xy[0], xy[1], &next));
      lbl.reset(next);
    }
    if (normalize) {
      std::fprintf(stderr, "vsseg: --normalize does not apply to labels\n");
      return 1;
    }
    check(vsseg_label_write(lbl.get(), out.c_str()));
    return 0;
  }
  vsseg_volume* raw = nullptr;
  check(vsseg_volume_read(in.c_str(), &raw));
  VolumePtr vol(raw);
  if (!spacing.empty()) {
    const double target[3] = {spacing[0], spacing[1], spacing[2]};
    vsseg_volume* next = nullptr;
    check(vsseg_volume_resample(vol.get(), target, 3, &next));
    vol.reset(next);
  }
  if (!xy.empty()) {
    vsseg_volume* next = nullptr;
    check(vsseg_volume_crop_pad_xy(vol.get(), xy[0], xy[1], &next));
    vol.reset(next);
  }
  if (normalize) {
    vsseg_volume* next = nullptr;
    check(vsseg_volume_normalize(vol.get(), &next));
    vol.reset(next);
  }
  check(vsseg_volume_write(vol.get(), out.c_str()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vsseg - weakly-supervised cross-modality segmentation toolkit"};
  app.require_subcommand(1);

  // preprocess
  auto* pre = app.add_subcommand(
      "preprocess", "Resample to a target spacing, crop/pad the xy-plane, normalize");
  std::string pre_in, pre_out;
  bool pre_label = false, pre_normalize = false;
  std::vector<double> pre_spacing;
  std::vector<int64_t> pre_xy;
  pre->add_option("--in", pre_in, "input NIfTI")->required();
  pre->add_option("--out", pre_out, "output NIfTI")->required();
  pre->add_flag("--label", pre_label, "treat input as a label mask (nearest neighbor)");
  pre->add_option("--spacing", pre_spacing, "target spacing in mm, e.g. 1,1,1")
      ->delimiter(',')
      ->expected(3);
  pre->add_option("--xy", pre_xy, "crop/pad target for x,y, e.g. 256,256")
      ->delimiter(',')
      ->expected(2);
  pre->add_flag("--normalize", pre_normalize, "z-score the whole volume");

  // augment
  auto* aug = app.add_subcommand("augment", "Apply one augmentation kind");
  std::string aug_in, aug_out, aug_kind;
  std::uint64_t aug_seed = 0;
  bool aug_label = false;
  aug->add_option("--in", aug_in, "input NIfTI")->required();
  aug->add_option("--out", aug_out, "output NIfTI")->required();
  aug->add_option("--kind", aug_kind,
                  "rotate|noise|scale|translate|contrast|flip_x|flip_y|flip_z")
      ->required();
  aug->add_option("--seed", aug_seed, "64-bit seed")->required();
  aug->add_flag("--label", aug_label, "input is a label mask (spatial kinds only)");

  // reduce-tumor
  auto* rt = app.add_subcommand("reduce-tumor",
                                "Scale intensities under the VS mask (AT dataset)");
  std::string rt_image, rt_label, rt_out;
  double rt_factor = 0.5;
  rt->add_option("--image", rt_image)->required();
  rt->add_option("--label", rt_label)->required();
  rt->add_option("--factor", rt_factor, "multiplier for VS voxels (default 0.5)");
  rt->add_option("--out", rt_out)->required();

  // loss
  auto* loss = app.add_subcommand("loss", "Evaluate a training loss on files");
  std::string loss_pred, loss_target, loss_kind = "combined", loss_grad;
  double loss_eps = 1.0, loss_wd = 1.0, loss_wc = 1.0;
  loss->add_option("--pred", loss_pred, "probability map (4D NIfTI)")->required();
  loss->add_option("--target", loss_target, "label NIfTI")->required();
  loss->add_option("--kind", loss_kind, "dice|ce|combined");
  loss->add_option("--epsilon", loss_eps, "dice smoothing (default 1.0)");
  loss->add_option("--w-dice", loss_wd, "combined-loss dice weight");
  loss->add_option("--w-ce", loss_wc, "combined-loss cross-entropy weight");
  loss->add_option("--grad-out", loss_grad, "write the gradient as a 4D NIfTI");

  // metrics
  auto* met = app.add_subcommand("metrics", "Dice and ASSD report over cases");
  std::vector<std::string> met_preds, met_truths;
  std::vector<int> met_classes = {1, 2};
  std::string met_out;
  met->add_option("--pred", met_preds, "prediction NIfTI (repeatable)")->required();
  met->add_option("--truth", met_truths, "reference NIfTI (repeatable)")->required();
  met->add_option("--classes", met_classes, "class ids, default 1,2")->delimiter(',');
  met->add_option("--out", met_out, "report JSON path");

  // fid
  auto* fid = app.add_subcommand("fid", "Frechet distance between two feature sets");
  std::string fid_a, fid_b;
  fid->add_option("--features-a", fid_a, "CSV, one feature vector per row")->required();
  fid->add_option("--features-b", fid_b, "CSV, one feature vector per row")->required();

  // postprocess
  auto* post = app.add_subcommand("postprocess", "Keep the largest component of a class");
  std::string post_in, post_out;
  int post_class = 1;
  post->add_option("--in", post_in)->required();
  post->add_option("--out", post_out)->required();
  post->add_option("--class", post_class, "class id (default 1 = VS)");

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "Average probability maps, emit labels");
  std::vector<std::string> ens_probs;
  std::vector<double> ens_weights;
  std::string ens_out;
  int ens_keep_largest = -1;
  ens->add_option("--probs", ens_probs, "probability maps (two or more)")->required();
  ens->add_option("--out", ens_out, "label NIfTI output")->required();
  ens->add_option("--weights", ens_weights, "per-map weights")->delimiter(',');
  ens->add_option("--keep-largest", ens_keep_largest,
                  "also keep only the largest component of this class");

  // pipeline assemble / run
  auto* pipe = app.add_subcommand("pipeline", "Self-training rounds");
  pipe->require_subcommand(1);
  auto* asm_cmd = pipe->add_subcommand("assemble", "Build a round manifest from pools");
  int asm_round = 1;
  std::string asm_pools, asm_out, asm_created;
  asm_cmd->add_option("--round", asm_round, "1, 2 or 3")->required();
  asm_cmd->add_option("--pools", asm_pools, "pools JSON")->required();
  asm_cmd->add_option("--out", asm_out, "manifest JSON")->required();
  asm_cmd->add_option("--created", asm_created,
                      "timestamp to embed (defaults to the current UTC time)");
  auto* run_cmd = pipe->add_subcommand("run", "Invoke the external model runner");
  std::string run_manifest, run_runner, run_mode = "predict", run_outdir;
  bool run_no_postprocess = false;
  run_cmd->add_option("--manifest", run_manifest)->required();
  run_cmd->add_option("--runner", run_runner, "command with {manifest} and {outdir}")
      ->required();
  run_cmd->add_option("--mode", run_mode, "train|predict");
  run_cmd->add_option("--outdir", run_outdir)->required();
  run_cmd->add_flag("--no-postprocess", run_no_postprocess,
                    "skip largest-component cleanup of pseudo-labels");

  // schedule
  auto* sched = app.add_subcommand("schedule", "Learning rate of the two-stage schedule");
  int sched_stage = 1, sched_epoch = 0;
  double sched_base = -1.0;
  int sched_const = -1, sched_decay = -1;
  sched->add_option("--stage", sched_stage, "1 or 2");
  sched->add_option("--epoch", sched_epoch)->required();
  sched->add_option("--base-lr", sched_base, "override the stage default");
  sched->add_option("--epochs-const", sched_const, "override the stage default");
  sched->add_option("--epochs-decay", sched_decay, "override the stage default");

  CLI11_PARSE(app, argc, argv);

  if (*pre) {
    return run_preprocess(pre_in, pre_out, pre_label, pre_spacing, pre_xy, pre_normalize);
  }

  if (*aug) {
    if (aug_label) {
      vsseg_label* in = nullptr;
      check(vsseg_label_read(aug_in.c_str(), &in));
      LabelPtr lbl(in);
      vsseg_label* out = nullptr;
      check(vsseg_label_augment(lbl.get(), aug_kind.c_str(), aug_seed, &out));
      LabelPtr res(out);
      check(vsseg_label_write(res.get(), aug_out.c_str()));
    } else {
      vsseg_volume* in = nullptr;
      check(vsseg_volume_read(aug_in.c_str(), &in));
      VolumePtr vol(in);
      vsseg_volume* out = nullptr;
      check(vsseg_volume_augment(vol.get(), aug_kind.c_str(), aug_seed, &out));
      VolumePtr res(out);
      check(vsseg_volume_write(res.get(), aug_out.c_str()));
    }
    return 0;
  }

  if (*rt) {
    vsseg_volume* img = nullptr;
    check(vsseg_volume_read(rt_image.c_str(), &img));
    VolumePtr image(img);
    vsseg_label* msk = nullptr;
    check(vsseg_label_read(rt_label.c_str(), &msk));
    LabelPtr mask(msk);
    vsseg_volume* out = nullptr;
    check(vsseg_reduce_tumor(image.get(), mask.get(), rt_factor, &out));
    VolumePtr res(out);
    check(vsseg_volume_write(res.get(), rt_out.c_str()));
    return 0;
  }

  if (*loss) {
    double value = 0.0, raw = 0.0;
    check(vsseg_loss_eval(loss_pred.c_str(), loss_target.c_str(), loss_kind.c_str(),
                          loss_eps, loss_wd, loss_wc,
                          loss_grad.empty() ? nullptr : loss_grad.c_str(), &value, &raw));
    std::printf("%s: %.9g\n", loss_kind.c_str(), value);
    if (loss_kind == "ce") std::printf("ce_raw_sum: %.9g\n", raw);
    return 0;
  }

  if (*met) {
    if (met_preds.size() != met_truths.size()) {
      std::fprintf(stderr, "vsseg: --pred and --truth counts differ\n");
      return 1;
    }
    std::vector<const char*> preds, truths;
    for (const auto& p : met_preds) preds.push_back(p.c_str());
    for (const auto& t : met_truths) truths.push_back(t.c_str());
    char* report = nullptr;
    check(vsseg_metrics_report(preds.data(), truths.data(), preds.size(),
                               met_classes.data(), met_classes.size(),
                               met_out.empty() ? nullptr : met_out.c_str(), &report));
    std::fputs(report, stdout);
    vsseg_string_free(report);
    return 0;
  }

  if (*fid) {
    double value = 0.0;
    check(vsseg_fid_from_csv(fid_a.c_str(), fid_b.c_str(), &value));
    std::printf("frechet_distance: %.9g\n", value);
    return 0;
  }

  if (*post) {
    vsseg_label* in = nullptr;
    check(vsseg_label_read(post_in.c_str(), &in));
    LabelPtr lbl(in);
    vsseg_label* out = nullptr;
    check(vsseg_keep_largest_component(lbl.get(), post_class, &out));
    LabelPtr res(out);
    check(vsseg_label_write(res.get(), post_out.c_str()));
    return 0;
  }

  if (*ens) {
    std::vector<ProbmapPtr> maps;
    std::vector<const vsseg_probmap*> raw;
    for (const auto& path : ens_probs) {
      vsseg_probmap* m = nullptr;
      check(vsseg_probmap_read(path.c_str(), &m));
      maps.emplace_back(m);
      raw.push_back(m);
    }
    vsseg_probmap* mean = nullptr;
    check(vsseg_ensemble(raw.data(), raw.size(),
                         ens_weights.empty() ? nullptr : ens_weights.data(), &mean));
    ProbmapPtr ensembled(mean);
    vsseg_label* labels = nullptr;
    check(vsseg_argmax_labels(ensembled.get(), &labels));
    LabelPtr result(labels);
    if (ens_keep_largest >= 0) {
      vsseg_label* cleaned = nullptr;
      check(vsseg_keep_largest_component(result.get(), ens_keep_largest, &cleaned));
      result.reset(cleaned);
    }
    check(vsseg_label_write(result.get(), ens_out.c_str()));
    return 0;
  }

  if (*asm_cmd) {
    const std::string created = asm_created.empty() ? now_utc() : asm_created;
    check(vsseg_assemble_round(asm_round, asm_pools.c_str(), created.c_str(),
                               asm_out.c_str()));
    std::printf("wrote %s\n", asm_out.c_str());
    return 0;
  }

  if (*run_cmd) {
    char* summary = nullptr;
    check(vsseg_run_model(run_manifest.c_str(), run_runner.c_str(), run_mode.c_str(),
                          run_outdir.c_str(), run_no_postprocess ? 0 : 1, &summary));
    std::fputs(summary, stdout);
    vsseg_string_free(summary);
    return 0;
  }

  if (*sched) {
    double base = sched_base;
    int n_const = sched_const, n_decay = sched_decay;
    if (base <= 0.0 || n_const < 0 || n_decay < 0) {
      double d_base;
      int d_const, d_decay;
      check(vsseg_lr_stage_defaults(sched_stage, &d_base, &d_const, &d_decay));
      if (base <= 0.0) base = d_base;
      if (n_const < 0) n_const = d_const;
      if (n_decay < 0) n_decay = d_decay;
    }
    double lr = 0.0;
    check(vsseg_lr_at_epoch(base, n_const, n_decay, sched_epoch, &lr));
    std::printf("lr: %.9g\n", lr);
    return 0;
  }

  return 0;
}
