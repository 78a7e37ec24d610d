#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "core/nifti.hpp"
#include "core/pipeline.hpp"
#include "test_util.hpp"

#include "json.hpp"

using namespace vsseg;
namespace fs = std::filesystem;

namespace {

std::string stub_runner_path() {
  if (const char* env = std::getenv("VSSEG_STUB_RUNNER")) return env;
  // fall back to a sibling of this test binary
  char buf[4096];
  const ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  REQUIRE(n > 0);
  buf[n] = '\0';
  return (fs::path(buf).parent_path() / "stub_runner").string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// Builds a pools file over `n` synthetic cases with every pool populated, plus
// the tiny image files the runner will read.
std::string write_full_pools(const testutil::TempDir& tmp, int n, bool with_images) {
  std::mt19937_64 rng(1234);
  nlohmann::ordered_json pools;
  for (const char* pool : {"fake_hrT2", "AT"}) {
    pools[pool] = nlohmann::ordered_json::array();
    for (int i = 0; i < n; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "case_%03d", i);
      pools[pool].push_back({{"case_id", id},
                             {"image", tmp.file(std::string(pool) + "_" + id + ".nii")},
                             {"label", tmp.file(std::string("lbl_") + id + ".nii")}});
    }
  }
  pools["real_hrT2"] = nlohmann::ordered_json::array();
  pools["pseudo_labels"] = nlohmann::ordered_json::object();
  pools["augmented_pseudo"] = nlohmann::ordered_json::array();
  const char* kinds[] = {"rotate",   "noise",  "scale",  "translate",
                         "contrast", "flip_x", "flip_y", "flip_z"};
  for (int i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "real_%03d", i);
    const std::string image = tmp.file(std::string("real_") + id + ".nii");
    pools["real_hrT2"].push_back({{"case_id", id}, {"image", image}});
    pools["pseudo_labels"][id] = tmp.file(std::string("pseudo_") + id + ".nii");
    for (int k = 0; k < 8; ++k) {
      pools["augmented_pseudo"].push_back(
          {{"case_id", id},
           {"image", tmp.file(std::string("aug_") + id + "_" + kinds[k] + ".nii")},
           {"label", tmp.file(std::string("augp_") + id + "_" + kinds[k] + ".nii")},
           {"augmentation", {{"kind", kinds[k]}, {"seed", 1000 + k}}}});
    }
    if (with_images) {
      write_nifti(testutil::random_volume(rng, {12, 12, 8}), image);
    }
  }
  const std::string path = tmp.file("pools.json");
  std::ofstream out(path);
  out << pools.dump(2) << "\n";
  return path;
}

}  // namespace

TEST_CASE("stage defaults follow the two-stage translation schedule") {
  const ScheduleSpec s1 = stage_defaults(1);
  CHECK(s1.base_lr == 0.001);
  CHECK(s1.epochs_const == 50);
  CHECK(s1.epochs_decay == 50);
  const ScheduleSpec s2 = stage_defaults(2);
  CHECK(s2.base_lr == 0.0002);
  CHECK(s2.epochs_const == 5);
  CHECK(s2.epochs_decay == 5);
  CHECK_THROWS_AS((void)stage_defaults(3), ParamError);
}

TEST_CASE("learning rate endpoints and interior match the linear formula") {
  const ScheduleSpec s1 = stage_defaults(1);
  CHECK(lr_at_epoch(s1, 0) == 0.001);
  CHECK(lr_at_epoch(s1, 49) == 0.001);
  CHECK(lr_at_epoch(s1, 99) == 0.0);
  CHECK(lr_at_epoch(s1, 74) == doctest::Approx(0.001 * 25.0 / 49.0).epsilon(1e-15));

  const ScheduleSpec s2 = stage_defaults(2);
  CHECK(lr_at_epoch(s2, 0) == 0.0002);
  CHECK(lr_at_epoch(s2, 4) == 0.0002);
  CHECK(lr_at_epoch(s2, 9) == 0.0);
  CHECK(lr_at_epoch(s2, 7) == doctest::Approx(0.0002 * 2.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("learning rate is non-increasing and in range") {
  const ScheduleSpec spec{0.01, 3, 7};
  double prev = spec.base_lr;
  for (int e = 0; e < 10; ++e) {
    const double lr = lr_at_epoch(spec, e);
    CHECK(lr <= prev + 1e-15);
    CHECK(lr >= 0.0);
    prev = lr;
  }
  CHECK_THROWS_AS((void)lr_at_epoch(spec, 10), RangeError);
  CHECK_THROWS_AS((void)lr_at_epoch(spec, -1), RangeError);

  const ScheduleSpec single{0.01, 2, 1};
  CHECK(lr_at_epoch(single, 2) == 0.0);
}

TEST_CASE("round cardinalities are 2n, 3n, 10n over n-case pools") {
  testutil::TempDir tmp;
  const std::string pools_path = write_full_pools(tmp, 7, false);
  const CasePools pools = read_pools(pools_path);

  const DatasetManifest r1 = assemble_round(1, pools, "t0");
  CHECK(r1.entries.size() == 14);
  const DatasetManifest r2 = assemble_round(2, pools, "t0");
  CHECK(r2.entries.size() == 21);
  const DatasetManifest r3 = assemble_round(3, pools, "t0");
  CHECK(r3.entries.size() == 70);

  int fake = 0, at = 0, pseudo = 0, aug = 0;
  for (const auto& e : r3.entries) {
    fake += e.provenance == Provenance::fake_hrT2;
    at += e.provenance == Provenance::AT;
    pseudo += e.provenance == Provenance::pseudo_labeled;
    aug += e.provenance == Provenance::augmented_pseudo;
  }
  CHECK(fake == 7);
  CHECK(at == 7);
  CHECK(pseudo == 0);
  CHECK(aug == 56);
}

TEST_CASE("round 1 entries are a prefix of round 2; fake+AT persist into round 3") {
  testutil::TempDir tmp;
  const CasePools pools = read_pools(write_full_pools(tmp, 5, false));
  const DatasetManifest r1 = assemble_round(1, pools, "t");
  const DatasetManifest r2 = assemble_round(2, pools, "t");
  const DatasetManifest r3 = assemble_round(3, pools, "t");
  REQUIRE(r2.entries.size() >= r1.entries.size());
  for (std::size_t i = 0; i < r1.entries.size(); ++i) {
    CHECK(r1.entries[i].image_path == r2.entries[i].image_path);
    CHECK(r1.entries[i].provenance == r2.entries[i].provenance);
  }
  for (std::size_t i = 0; i < r1.entries.size(); ++i) {
    CHECK(r1.entries[i].image_path == r3.entries[i].image_path);
  }
  // pseudo-labels of round 2 never cite a round-2 artifact: they come from
  // the round-1 model's predictions (strict round ordering by construction)
  for (const auto& e : r2.entries) {
    if (e.provenance == Provenance::pseudo_labeled) {
      CHECK(e.label_path.has_value());
    }
  }
}

TEST_CASE("missing pools raise dependency errors naming the pool") {
  testutil::TempDir tmp;
  CasePools pools = read_pools(write_full_pools(tmp, 3, false));
  CasePools no_at = pools;
  no_at.at.clear();
  try {
    (void)assemble_round(1, no_at, "t");
    FAIL("expected DependencyError");
  } catch (const DependencyError& e) {
    CHECK(std::string(e.what()).find("AT") != std::string::npos);
  }
  CasePools no_pseudo = pools;
  no_pseudo.pseudo_labels.clear();
  CHECK_THROWS_AS((void)assemble_round(2, no_pseudo, "t"), DependencyError);
  CasePools no_aug = pools;
  no_aug.augmented_pseudo.clear();
  CHECK_THROWS_AS((void)assemble_round(3, no_aug, "t"), DependencyError);
  // dropping one kind of one case breaks the 8-way composition
  CasePools partial = pools;
  partial.augmented_pseudo.pop_back();
  CHECK_THROWS_AS((void)assemble_round(3, partial, "t"), ValidationError);
}

TEST_CASE("manifests round-trip through JSON and validate labels") {
  testutil::TempDir tmp;
  const CasePools pools = read_pools(write_full_pools(tmp, 3, false));
  const DatasetManifest m = assemble_round(3, pools, "2026-01-01T00:00:00Z");
  const std::string path = tmp.file("manifest.json");
  write_manifest(m, path);
  const DatasetManifest r = read_manifest(path);
  CHECK(r.round == 3);
  CHECK(r.created == "2026-01-01T00:00:00Z");
  REQUIRE(r.entries.size() == m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(r.entries[i].image_path == m.entries[i].image_path);
    CHECK(r.entries[i].label_path == m.entries[i].label_path);
    CHECK(r.entries[i].provenance == m.entries[i].provenance);
  }
  REQUIRE(r.entries.back().augmentation.has_value());
  CHECK(r.entries.back().augmentation->kind == "flip_z");

  DatasetManifest bad = m;
  bad.entries.back().label_path.reset();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("identical pools and created stamp give byte-identical manifests") {
  testutil::TempDir tmp;
  const std::string pools_path = write_full_pools(tmp, 4, false);
  const CasePools pools = read_pools(pools_path);
  for (int round = 1; round <= 3; ++round) {
    const std::string p1 = tmp.file("m1.json");
    const std::string p2 = tmp.file("m2.json");
    write_manifest(assemble_round(round, pools, "stamp"), p1);
    write_manifest(assemble_round(round, read_pools(pools_path), "stamp"), p2);
    CHECK(read_file(p1) == read_file(p2));
  }
}

TEST_CASE("unknown schema versions are rejected") {
  testutil::TempDir tmp;
  const std::string path = tmp.file("v9.json");
  {
    std::ofstream out(path);
    out << R"({"schema_version": 9, "round": 1, "entries": []})";
  }
  CHECK_THROWS_AS((void)read_manifest(path), UnsupportedError);
}

TEST_CASE("run_model drives the stub runner end to end in predict mode") {
  testutil::TempDir tmp;
  std::mt19937_64 rng(99);

  // manifest over three unlabeled real cases
  DatasetManifest m;
  m.round = 1;
  m.created = "t";
  for (int i = 0; i < 3; ++i) {
    const std::string id = "hr_" + std::to_string(i);
    const std::string image = tmp.file(id + ".nii");
    write_nifti(testutil::random_volume(rng, {16, 16, 12}), image);
    ManifestEntry e;
    e.image_path = image;
    e.provenance = Provenance::real_hrT2;
    e.source_case_id = id;
    m.entries.push_back(e);
  }
  const std::string manifest_path = tmp.file("predict.json");
  write_manifest(m, manifest_path);

  const std::string runner = stub_runner_path() + " {manifest} {outdir}";
  const std::string outdir = tmp.file("round1_out");
  const RunnerResult res = run_model(manifest_path, runner, "predict", outdir);
  REQUIRE(res.predictions.size() == 3);
  for (const auto& p : res.predictions) {
    const LabelVolume pseudo = read_label(p.pseudo_label_path);
    std::int64_t vs = 0, cochlea = 0;
    for (const auto v : pseudo.data()) {
      vs += v == 1;
      cochlea += v == 2;
    }
    CHECK(vs > 0);
    CHECK(cochlea > 0);
  }
  CHECK(fs::exists(fs::path(outdir) / "pseudo_labels.json"));
}

TEST_CASE("a failing runner surfaces as RunnerError with its output") {
  testutil::TempDir tmp;
  std::mt19937_64 rng(101);
  DatasetManifest m;
  m.round = 1;
  m.created = "t";
  ManifestEntry e;
  e.image_path = tmp.file("img.nii");
  write_nifti(testutil::random_volume(rng, {8, 8, 8}), e.image_path);
  e.provenance = Provenance::real_hrT2;
  e.source_case_id = "only";
  m.entries.push_back(e);
  const std::string manifest_path = tmp.file("m.json");
  write_manifest(m, manifest_path);

  const std::string runner = stub_runner_path() + " --mode=fail {manifest} {outdir}";
  try {
    (void)run_model(manifest_path, runner, "predict", tmp.file("out"));
    FAIL("expected RunnerError");
  } catch (const RunnerError& err) {
    CHECK(err.captured_output.find("simulated training crash") != std::string::npos);
  }
  // no pseudo-labels were produced
  CHECK(!fs::exists(fs::path(tmp.file("out")) / "pseudo_labels.json"));
}

TEST_CASE("maps that do not sum to one are rejected, naming the case") {
  testutil::TempDir tmp;
  std::mt19937_64 rng(103);
  DatasetManifest m;
  m.round = 1;
  m.created = "t";
  ManifestEntry e;
  e.image_path = tmp.file("img.nii");
  write_nifti(testutil::random_volume(rng, {8, 8, 8}), e.image_path);
  e.provenance = Provenance::real_hrT2;
  e.source_case_id = "case_bad";
  m.entries.push_back(e);
  const std::string manifest_path = tmp.file("m.json");
  write_manifest(m, manifest_path);

  const std::string runner = stub_runner_path() + " --mode=bad {manifest} {outdir}";
  try {
    (void)run_model(manifest_path, runner, "predict", tmp.file("out"));
    FAIL("expected ValidationError");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("case_bad") != std::string::npos);
  }
  CHECK(!fs::exists(fs::path(tmp.file("out")) / "case_bad_pseudo.nii.gz"));
}

TEST_CASE("runner templates must name both placeholders") {
  testutil::TempDir tmp;
  DatasetManifest m;
  m.round = 1;
  m.created = "t";
  const std::string manifest_path = tmp.file("m.json");
  write_manifest(m, manifest_path);
  CHECK_THROWS_AS((void)run_model(manifest_path, "true", "predict", tmp.file("o")),
                  ParamError);
  CHECK_THROWS_AS(
      (void)run_model(manifest_path, "cmd {manifest} {outdir}", "evaluate", tmp.file("o")),
      ParamError);
}
