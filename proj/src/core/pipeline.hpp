#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/augment.hpp"

namespace vsseg {

// Two-stage translation schedule: constant base LR, then a linear decay that
// is exactly base at the first decay epoch and exactly 0 at the last epoch.
struct ScheduleSpec {
  double base_lr = 0.001;
  int epochs_const = 50;
  int epochs_decay = 50;
};

// Stage 1: lr 0.001, 50 + 50 epochs. Stage 2: lr 0.0002, 5 + 5 epochs.
ScheduleSpec stage_defaults(int stage);

double lr_at_epoch(const ScheduleSpec& spec, int epoch);

enum class Provenance { fake_hrT2, AT, real_hrT2, pseudo_labeled, augmented_pseudo };

const char* provenance_name(Provenance p);
Provenance provenance_from_string(const std::string& name);

struct AugmentationTag {
  std::string kind;
  std::uint64_t seed = 0;
};

struct ManifestEntry {
  std::string image_path;
  std::optional<std::string> label_path;
  Provenance provenance = Provenance::fake_hrT2;
  std::string source_case_id;
  std::optional<AugmentationTag> augmentation;
};

struct DatasetManifest {
  int schema_version = 1;
  int round = 0;
  std::string created;
  std::vector<ManifestEntry> entries;

  void validate() const;
};

// Case pools available to the self-training rounds, loaded from a JSON file.
struct CasePools {
  struct LabeledCase {
    std::string case_id;
    std::string image;
    std::string label;
  };
  struct UnlabeledCase {
    std::string case_id;
    std::string image;
  };
  struct AugmentedCase {
    std::string case_id;  // source real hrT2 case
    std::string image;
    std::string label;  // pseudo-label of the augmented image
    AugmentationTag augmentation;
  };

  std::vector<LabeledCase> fake_hrT2;
  std::vector<LabeledCase> at;
  std::vector<UnlabeledCase> real_hrT2;
  std::vector<std::pair<std::string, std::string>> pseudo_labels;  // case_id -> path
  std::vector<AugmentedCase> augmented_pseudo;
};

CasePools read_pools(const std::string& path);

// Round 1: fake_hrT2 + AT. Round 2: round 1 + pseudo-labeled real hrT2.
// Round 3: fake_hrT2 + AT + the 8-way augmented real hrT2 with pseudo-labels
// (each source case must carry all eight kinds exactly once), which yields
// 10x the case count: 420 / 630 / 2100 for the 210-case pools. Entries are
// ordered by provenance block, then case id, then augmentation kind.
DatasetManifest assemble_round(int round, const CasePools& pools,
                               const std::string& created);

void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);
std::string manifest_to_json(const DatasetManifest& manifest);

struct RunnerResult {
  int exit_code = 0;
  std::string captured_output;
  std::string outdir;
  struct Prediction {
    std::string case_id;
    std::string prob_path;
    std::string pseudo_label_path;
  };
  std::vector<Prediction> predictions;  // predict mode only
};

// Invokes `runner_template` with {manifest} and {outdir} substituted. In
// predict mode, expects one probability map per case at
// <outdir>/<case_id>_prob.nii[.gz]; every map is validated before any
// pseudo-label (argmax, optionally largest-VS-component) is written. A
// non-zero child exit surfaces as RunnerError with the captured output.
RunnerResult run_model(const std::string& manifest_path, const std::string& runner_template,
                       const std::string& mode, const std::string& outdir,
                       bool postprocess_pseudo_labels = true);

}  // namespace vsseg
