#include "core/pipeline.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "core/ensemble.hpp"
#include "core/nifti.hpp"
#include "core/postprocess.hpp"

#include "json.hpp"

namespace vsseg {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

ScheduleSpec stage_defaults(int stage) {
  if (stage == 1) return {0.001, 50, 50};
  if (stage == 2) return {0.0002, 5, 5};
  throw ParamError("schedule stage must be 1 or 2");
}

double lr_at_epoch(const ScheduleSpec& spec, int epoch) {
  if (!(spec.base_lr > 0.0)) throw ParamError("base learning rate must be positive");
  if (spec.epochs_const < 0 || spec.epochs_decay < 1) {
    throw ParamError("schedule needs epochs_const >= 0 and epochs_decay >= 1");
  }
  const int total = spec.epochs_const + spec.epochs_decay;
  if (epoch < 0 || epoch >= total) {
    throw RangeError("epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(total) + ")");
  }
  if (epoch < spec.epochs_const) return spec.base_lr;
  if (spec.epochs_decay == 1) return 0.0;
  // Linear from base at the first decay epoch to exactly 0 at the last one.
  return spec.base_lr * static_cast<double>(total - 1 - epoch) /
         static_cast<double>(spec.epochs_decay - 1);
}

namespace {

struct ProvenanceName {
  Provenance p;
  const char* name;
};
constexpr ProvenanceName kProvenanceNames[] = {
    {Provenance::fake_hrT2, "fake_hrT2"},
    {Provenance::AT, "AT"},
    {Provenance::real_hrT2, "real_hrT2"},
    {Provenance::pseudo_labeled, "pseudo_labeled"},
    {Provenance::augmented_pseudo, "augmented_pseudo"},
};

ordered_json entry_to_json(const ManifestEntry& e) {
  ordered_json j;
  j["image_path"] = e.image_path;
  if (e.label_path) j["label_path"] = *e.label_path;
  j["provenance"] = provenance_name(e.provenance);
  j["source_case_id"] = e.source_case_id;
  if (e.augmentation) {
    j["augmentation"] = {{"kind", e.augmentation->kind}, {"seed", e.augmentation->seed}};
  }
  return j;
}

ManifestEntry entry_from_json(const ordered_json& j) {
  ManifestEntry e;
  e.image_path = j.at("image_path").get<std::string>();
  if (j.contains("label_path") && !j["label_path"].is_null()) {
    e.label_path = j["label_path"].get<std::string>();
  }
  e.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  e.source_case_id = j.at("source_case_id").get<std::string>();
  if (j.contains("augmentation") && !j["augmentation"].is_null()) {
    AugmentationTag tag;
    tag.kind = j["augmentation"].at("kind").get<std::string>();
    tag.seed = j["augmentation"].at("seed").get<std::uint64_t>();
    e.augmentation = tag;
  }
  return e;
}

int augmentation_kind_rank(const std::string& kind) {
  return static_cast<int>(augmentation_kind_from_string(kind));
}

ordered_json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace

const char* provenance_name(Provenance p) {
  return kProvenanceNames[static_cast<int>(p)].name;
}

Provenance provenance_from_string(const std::string& name) {
  for (const auto& pn : kProvenanceNames) {
    if (name == pn.name) return pn.p;
  }
  throw FormatError("unknown provenance \"" + name + "\"");
}

void DatasetManifest::validate() const {
  if (round < 0) throw ValidationError("manifest round must be >= 0");
  for (const auto& e : entries) {
    if (e.image_path.empty()) throw ValidationError("manifest entry with empty image_path");
    if ((e.provenance == Provenance::pseudo_labeled ||
         e.provenance == Provenance::augmented_pseudo) &&
        !e.label_path) {
      throw ValidationError("entry " + e.image_path + " (" +
                            provenance_name(e.provenance) +
                            ") must carry its pseudo-label path");
    }
  }
}

CasePools read_pools(const std::string& path) {
  const ordered_json j = load_json_file(path);
  CasePools pools;
  auto get_str = [&](const ordered_json& o, const char* key) {
    if (!o.contains(key)) {
      throw FormatError(std::string("pool entry missing \"") + key + "\" in " + path);
    }
    return o[key].get<std::string>();
  };
  if (j.contains("fake_hrT2")) {
    for (const auto& o : j["fake_hrT2"]) {
      pools.fake_hrT2.push_back({get_str(o, "case_id"), get_str(o, "image"),
                                 get_str(o, "label")});
    }
  }
  if (j.contains("AT")) {
    for (const auto& o : j["AT"]) {
      pools.at.push_back({get_str(o, "case_id"), get_str(o, "image"), get_str(o, "label")});
    }
  }
  if (j.contains("real_hrT2")) {
    for (const auto& o : j["real_hrT2"]) {
      pools.real_hrT2.push_back({get_str(o, "case_id"), get_str(o, "image")});
    }
  }
  if (j.contains("pseudo_labels")) {
    for (const auto& [case_id, p] : j["pseudo_labels"].items()) {
      pools.pseudo_labels.emplace_back(case_id, p.get<std::string>());
    }
  }
  if (j.contains("augmented_pseudo")) {
    for (const auto& o : j["augmented_pseudo"]) {
      CasePools::AugmentedCase c;
      c.case_id = get_str(o, "case_id");
      c.image = get_str(o, "image");
      c.label = get_str(o, "label");
      if (!o.contains("augmentation")) {
        throw FormatError("augmented_pseudo entry without augmentation tag in " + path);
      }
      c.augmentation.kind = o["augmentation"].at("kind").get<std::string>();
      c.augmentation.seed = o["augmentation"].at("seed").get<std::uint64_t>();
      pools.augmented_pseudo.push_back(std::move(c));
    }
  }
  return pools;
}

DatasetManifest assemble_round(int round, const CasePools& pools,
                               const std::string& created) {
  if (round < 1 || round > 3) throw ParamError("round must be 1, 2 or 3");

  DatasetManifest m;
  m.round = round;
  m.created = created;

  auto require_pool = [](bool ok, const char* what) {
    if (!ok) throw DependencyError(std::string("missing pool: ") + what);
  };
  require_pool(!pools.fake_hrT2.empty(), "fake_hrT2");
  require_pool(!pools.at.empty(), "AT");

  auto add_labeled = [&](const std::vector<CasePools::LabeledCase>& cases, Provenance p) {
    std::vector<const CasePools::LabeledCase*> sorted;
    sorted.reserve(cases.size());
    for (const auto& c : cases) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->case_id < b->case_id; });
    for (const auto* c : sorted) {
      ManifestEntry e;
      e.image_path = c->image;
      e.label_path = c->label;
      e.provenance = p;
      e.source_case_id = c->case_id;
      m.entries.push_back(std::move(e));
    }
  };
  add_labeled(pools.fake_hrT2, Provenance::fake_hrT2);
  add_labeled(pools.at, Provenance::AT);

  if (round == 2) {
    require_pool(!pools.real_hrT2.empty(), "real_hrT2");
    require_pool(!pools.pseudo_labels.empty(), "pseudo_labels");
    std::map<std::string, std::string> pseudo(pools.pseudo_labels.begin(),
                                              pools.pseudo_labels.end());
    std::vector<const CasePools::UnlabeledCase*> sorted;
    for (const auto& c : pools.real_hrT2) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->case_id < b->case_id; });
    for (const auto* c : sorted) {
      const auto it = pseudo.find(c->case_id);
      if (it == pseudo.end()) {
        throw DependencyError("missing pool: pseudo_labels (no pseudo-label for case " +
                              c->case_id + ")");
      }
      ManifestEntry e;
      e.image_path = c->image;
      e.label_path = it->second;
      e.provenance = Provenance::pseudo_labeled;
      e.source_case_id = c->case_id;
      m.entries.push_back(std::move(e));
    }
  }

  if (round == 3) {
    require_pool(!pools.augmented_pseudo.empty(), "augmented_pseudo");
    std::vector<const CasePools::AugmentedCase*> sorted;
    for (const auto& c : pools.augmented_pseudo) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
      if (a->case_id != b->case_id) return a->case_id < b->case_id;
      return augmentation_kind_rank(a->augmentation.kind) <
             augmentation_kind_rank(b->augmentation.kind);
    });
    // Each source case must carry all eight kinds exactly once.
    std::map<std::string, std::set<int>> kinds_by_case;
    for (const auto* c : sorted) {
      if (!kinds_by_case[c->case_id].insert(augmentation_kind_rank(c->augmentation.kind))
               .second) {
        throw ValidationError("case " + c->case_id + " repeats augmentation kind " +
                              c->augmentation.kind);
      }
    }
    for (const auto& [case_id, kinds] : kinds_by_case) {
      if (kinds.size() != kNumAugmentationKinds) {
        throw ValidationError("case " + case_id + " has " + std::to_string(kinds.size()) +
                              " augmented variants, expected all 8 kinds");
      }
    }
    for (const auto* c : sorted) {
      ManifestEntry e;
      e.image_path = c->image;
      e.label_path = c->label;
      e.provenance = Provenance::augmented_pseudo;
      e.source_case_id = c->case_id;
      e.augmentation = c->augmentation;
      m.entries.push_back(std::move(e));
    }
  }

  m.validate();
  return m;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  ordered_json j;
  j["schema_version"] = manifest.schema_version;
  j["round"] = manifest.round;
  j["created"] = manifest.created;
  j["entries"] = ordered_json::array();
  for (const auto& e : manifest.entries) j["entries"].push_back(entry_to_json(e));
  return j.dump(2) + "\n";
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  manifest.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << manifest_to_json(manifest);
  if (!out) throw IoError("short write on " + path);
}

DatasetManifest read_manifest(const std::string& path) {
  const ordered_json j = load_json_file(path);
  DatasetManifest m;
  if (!j.contains("schema_version")) {
    throw FormatError("manifest missing schema_version: " + path);
  }
  m.schema_version = j["schema_version"].get<int>();
  if (m.schema_version != 1) {
    throw UnsupportedError("manifest schema_version " +
                           std::to_string(m.schema_version) + " not supported");
  }
  m.round = j.at("round").get<int>();
  m.created = j.value("created", std::string{});
  for (const auto& o : j.at("entries")) m.entries.push_back(entry_from_json(o));
  m.validate();
  return m;
}

namespace {

std::string substitute_template(const std::string& tmpl, const std::string& manifest,
                                const std::string& outdir) {
  auto replace_all = [](std::string s, const std::string& from, const std::string& to,
                        int* count) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, from.size(), to);
      pos += to.size();
      ++*count;
    }
    return s;
  };
  int n_manifest = 0, n_outdir = 0;
  std::string cmd = replace_all(tmpl, "{manifest}", manifest, &n_manifest);
  cmd = replace_all(cmd, "{outdir}", outdir, &n_outdir);
  if (n_manifest == 0 || n_outdir == 0) {
    throw ParamError("runner template must contain {manifest} and {outdir}");
  }
  return cmd;
}

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run_command(const std::string& cmd) {
  const std::string full = cmd + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  if (pipe == nullptr) throw IoError("failed to launch runner: " + cmd);
  std::string output;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, got);
  const int status = pclose(pipe);
  int code = -1;
  if (WIFEXITED(status)) code = WEXITSTATUS(status);
  return {code, std::move(output)};
}

}  // namespace

RunnerResult run_model(const std::string& manifest_path, const std::string& runner_template,
                       const std::string& mode, const std::string& outdir,
                       bool postprocess_pseudo_labels) {
  if (mode != "train" && mode != "predict") {
    throw ParamError("mode must be \"train\" or \"predict\"");
  }
  const DatasetManifest manifest = read_manifest(manifest_path);
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw IoError("cannot create output directory " + outdir);

  const std::string cmd = substitute_template(runner_template, manifest_path, outdir);
  const CommandResult run = run_command(cmd);
  RunnerResult result;
  result.exit_code = run.exit_code;
  result.captured_output = run.output;
  result.outdir = outdir;
  if (run.exit_code != 0) {
    throw RunnerError("runner exited with code " + std::to_string(run.exit_code) + ": " +
                          cmd,
                      run.output);
  }
  if (mode == "train") return result;

  // Unique prediction targets, in manifest order.
  std::vector<std::string> case_ids;
  std::set<std::string> seen;
  for (const auto& e : manifest.entries) {
    if (seen.insert(e.source_case_id).second) case_ids.push_back(e.source_case_id);
  }

  auto prob_path_for = [&](const std::string& case_id) -> std::string {
    const std::string base = (fs::path(outdir) / (case_id + "_prob.nii")).string();
    if (fs::exists(base + ".gz")) return base + ".gz";
    return base;
  };

  // Validate every returned map before deriving any pseudo-label.
  std::string failures;
  for (const auto& case_id : case_ids) {
    const std::string path = prob_path_for(case_id);
    try {
      (void)read_probability_map(path);
    } catch (const Error& e) {
      failures += "\n  case " + case_id + ": " + e.what();
    }
  }
  if (!failures.empty()) {
    throw ValidationError("invalid prediction files:" + failures);
  }

  for (const auto& case_id : case_ids) {
    const std::string prob_path = prob_path_for(case_id);
    const ProbabilityMap map = read_probability_map(prob_path);
    LabelVolume pseudo = argmax_labels(map);
    if (postprocess_pseudo_labels) pseudo = keep_largest_component(pseudo, 1);
    const std::string out_path =
        (fs::path(outdir) / (case_id + "_pseudo.nii.gz")).string();
    write_nifti(pseudo, out_path);
    result.predictions.push_back({case_id, prob_path, out_path});
  }

  ordered_json index;
  for (const auto& p : result.predictions) index[p.case_id] = p.pseudo_label_path;
  std::ofstream idx((fs::path(outdir) / "pseudo_labels.json").string(), std::ios::trunc);
  if (!idx) throw IoError("cannot write pseudo_labels.json in " + outdir);
  idx << index.dump(2) << "\n";
  return result;
}

}  // namespace vsseg
