// Stand-in for the external segmentation model: reads a manifest, emits one
// canned probability map per case. Blob placement is a deterministic function
// of the case id, and the VS appears on both sides of the grid so that the
// largest-component cleanup has something to do.
//
// Usage: stub_runner [--mode=ok|fail|bad] [--variant=N] <manifest> <outdir>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "core/nifti.hpp"
#include "core/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vsseg;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

void add_blob(std::vector<float>& probs, const Dims& dims, int cls, std::int64_t cx,
              std::int64_t cy, std::int64_t cz, std::int64_t r) {
  const std::int64_t n = voxel_count(dims);
  for (std::int64_t z = std::max<std::int64_t>(0, cz - r);
       z <= std::min(dims[2] - 1, cz + r); ++z) {
    for (std::int64_t y = std::max<std::int64_t>(0, cy - r);
         y <= std::min(dims[1] - 1, cy + r); ++y) {
      for (std::int64_t x = std::max<std::int64_t>(0, cx - r);
           x <= std::min(dims[0] - 1, cx + r); ++x) {
        const std::int64_t d2 =
            (x - cx) * (x - cx) + (y - cy) * (y - cy) + (z - cz) * (z - cz);
        if (d2 > r * r) continue;
        const std::int64_t i = flat_index(dims, x, y, z);
        for (int c = 0; c < 3; ++c) {
          probs[static_cast<std::size_t>(c * n + i)] = c == cls ? 0.8f : 0.1f;
        }
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "ok";
  int variant = 0;
  std::vector<std::string> positional;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--mode=", 0) == 0) {
      mode = arg.substr(7);
    } else if (arg.rfind("--variant=", 0) == 0) {
      variant = std::atoi(arg.c_str() + 10);
    } else {
      positional.push_back(arg);
    }
  }
  if (positional.size() != 2) {
    std::fprintf(stderr, "usage: stub_runner [--mode=...] <manifest> <outdir>\n");
    return 2;
  }
  if (mode == "fail") {
    std::fprintf(stderr, "stub runner: simulated training crash\n");
    return 1;
  }

  try {
    const DatasetManifest manifest = read_manifest(positional[0]);
    const fs::path outdir(positional[1]);
    fs::create_directories(outdir);

    std::set<std::string> done;
    for (const auto& entry : manifest.entries) {
      if (!done.insert(entry.source_case_id).second) continue;
      const Volume image = read_volume(entry.image_path);
      const Dims dims = image.dims();
      const std::int64_t n = voxel_count(dims);

      std::vector<float> probs(static_cast<std::size_t>(3 * n));
      const float bad_scale = mode == "bad" ? 0.8f : 1.0f;
      for (std::int64_t i = 0; i < n; ++i) {
        probs[static_cast<std::size_t>(i)] = 0.8f * bad_scale;
        probs[static_cast<std::size_t>(n + i)] = 0.1f * bad_scale;
        probs[static_cast<std::size_t>(2 * n + i)] = 0.1f * bad_scale;
      }
      if (mode != "bad") {
        const std::uint64_t h = fnv1a(entry.source_case_id);
        const std::int64_t jitter = static_cast<std::int64_t>(h % 3);
        const std::int64_t vx = dims[0] / 4 + jitter + variant;
        const std::int64_t vy = dims[1] / 2;
        const std::int64_t vz = dims[2] / 2;
        add_blob(probs, dims, 1, vx, vy, vz, 3);
        // spurious contralateral VS fragment
        add_blob(probs, dims, 1, dims[0] - 1 - vx, vy, vz, 1);
        add_blob(probs, dims, 2, dims[0] / 2, dims[1] / 4, vz, 1);
      }
      const std::string out =
          (outdir / (entry.source_case_id + "_prob.nii.gz")).string();
      if (mode == "bad") {
        // deliberately invalid: vectors sum to 0.8
        write_nifti_4d(dims, 3, image.spacing(), probs, image.meta(), out);
      } else {
        write_nifti(ProbabilityMap(3, dims, image.spacing(), probs), out);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stub runner: %s\n", e.what());
    return 3;
  }
  return 0;
}
