#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "core/nifti.hpp"
#include "test_util.hpp"

using namespace vsseg;

namespace {

// Hand-built minimal NIfTI-1 file, byte by byte, independent of the writer.
std::vector<char> minimal_header_bytes(std::int16_t datatype, std::int16_t bitpix,
                                       const char* magic, float scl_slope = 0.0f,
                                       float scl_inter = 0.0f, std::int16_t ndim = 3) {
  std::vector<char> h(352, 0);
  auto put32 = [&](std::size_t off, std::int32_t v) { std::memcpy(h.data() + off, &v, 4); };
  auto put16 = [&](std::size_t off, std::int16_t v) { std::memcpy(h.data() + off, &v, 2); };
  auto putf = [&](std::size_t off, float v) { std::memcpy(h.data() + off, &v, 4); };
  put32(0, 348);
  put16(40, ndim);          // dim[0]
  put16(42, 2);             // dim[1]
  put16(44, 2);             // dim[2]
  put16(46, 2);             // dim[3]
  for (int a = 4; a < 8; ++a) put16(40 + 2 * static_cast<std::size_t>(a), 1);
  put16(70, datatype);
  put16(72, bitpix);
  putf(76, 1.0f);           // pixdim[0]
  putf(80, 1.0f);
  putf(84, 1.0f);
  putf(88, 1.0f);
  putf(108, 352.0f);        // vox_offset
  putf(112, scl_slope);
  putf(116, scl_inter);
  std::memcpy(h.data() + 344, magic, 4);
  return h;
}

void write_raw(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("hand-built 2x2x2 float32 file reads back the identity ramp") {
  testutil::TempDir tmp;
  auto bytes = minimal_header_bytes(16, 32, "n+1");
  for (int i = 0; i < 8; ++i) {
    const float v = static_cast<float>(i);
    bytes.insert(bytes.end(), reinterpret_cast<const char*>(&v),
                 reinterpret_cast<const char*>(&v) + 4);
  }
  const std::string path = tmp.file("ramp.nii");
  write_raw(path, bytes);

  const Volume vol = read_volume(path);
  CHECK(vol.dims() == Dims{2, 2, 2});
  CHECK(vol.spacing() == Spacing{1.0, 1.0, 1.0});
  for (int i = 0; i < 8; ++i) CHECK(vol.data()[static_cast<std::size_t>(i)] == float(i));
}

TEST_CASE("scl_slope 2 / scl_inter 1 maps raw 3 to 7") {
  testutil::TempDir tmp;
  auto bytes = minimal_header_bytes(4, 16, "n+1", 2.0f, 1.0f);
  for (std::int16_t v : {3, 0, 1, 2, 3, 4, 5, 6}) {
    bytes.insert(bytes.end(), reinterpret_cast<const char*>(&v),
                 reinterpret_cast<const char*>(&v) + 2);
  }
  const std::string path = tmp.file("scaled.nii");
  write_raw(path, bytes);
  const Volume vol = read_volume(path);
  CHECK(vol.data()[0] == doctest::Approx(7.0f));
  CHECK(vol.data()[1] == doctest::Approx(1.0f));
}

TEST_CASE("two-file magic ni1 is rejected as unsupported") {
  testutil::TempDir tmp;
  auto bytes = minimal_header_bytes(16, 32, "ni1");
  bytes.resize(352 + 8 * 4, 0);
  const std::string path = tmp.file("twofile.nii");
  write_raw(path, bytes);
  CHECK_THROWS_AS((void)read_volume(path), UnsupportedError);
}

TEST_CASE("malformed headers name the offending field") {
  testutil::TempDir tmp;
  SUBCASE("sizeof_hdr") {
    auto bytes = minimal_header_bytes(16, 32, "n+1");
    const std::int32_t bad = 123;
    std::memcpy(bytes.data(), &bad, 4);
    bytes.resize(352 + 32, 0);
    const std::string path = tmp.file("bad_size.nii");
    write_raw(path, bytes);
    try {
      (void)read_volume(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("sizeof_hdr") != std::string::npos);
    }
  }
  SUBCASE("unsupported datatype") {
    auto bytes = minimal_header_bytes(64, 64, "n+1");  // float64
    bytes.resize(352 + 64, 0);
    const std::string path = tmp.file("f64.nii");
    write_raw(path, bytes);
    CHECK_THROWS_AS((void)read_volume(path), UnsupportedError);
  }
  SUBCASE("non-3D") {
    auto bytes = minimal_header_bytes(16, 32, "n+1", 0.0f, 0.0f, /*ndim=*/2);
    bytes.resize(352 + 32, 0);
    const std::string path = tmp.file("2d.nii");
    write_raw(path, bytes);
    CHECK_THROWS_AS((void)read_volume(path), DimensionError);
  }
  SUBCASE("truncated data") {
    auto bytes = minimal_header_bytes(16, 32, "n+1");
    bytes.resize(352 + 4, 0);  // 1 of 8 voxels
    const std::string path = tmp.file("short.nii");
    write_raw(path, bytes);
    CHECK_THROWS_AS((void)read_volume(path), FormatError);
  }
}

TEST_CASE("read_nifti auto-detects unscaled uint8 masks as labels") {
  testutil::TempDir tmp;
  auto bytes = minimal_header_bytes(2, 8, "n+1");
  for (std::uint8_t v : {0, 1, 2, 0, 1, 2, 0, 1}) bytes.push_back(static_cast<char>(v));
  const std::string path = tmp.file("mask.nii");
  write_raw(path, bytes);
  const NiftiVariant var = read_nifti(path);
  CHECK(std::holds_alternative<LabelVolume>(var));

  auto bytes2 = minimal_header_bytes(2, 8, "n+1");
  for (std::uint8_t v : {0, 1, 2, 0, 1, 2, 0, 9}) bytes2.push_back(static_cast<char>(v));
  const std::string path2 = tmp.file("gray.nii");
  write_raw(path2, bytes2);
  CHECK(std::holds_alternative<Volume>(read_nifti(path2)));
}

TEST_CASE("int16 label files normalize to uint8") {
  testutil::TempDir tmp;
  auto bytes = minimal_header_bytes(4, 16, "n+1");
  for (std::int16_t v : {0, 1, 2, 2, 1, 0, 0, 1}) {
    bytes.insert(bytes.end(), reinterpret_cast<const char*>(&v),
                 reinterpret_cast<const char*>(&v) + 2);
  }
  const std::string path = tmp.file("l16.nii");
  write_raw(path, bytes);
  const LabelVolume lbl = read_label(path);
  CHECK(lbl.data()[2] == 2);
  CHECK(lbl.data()[7] == 1);

  auto bad = minimal_header_bytes(4, 16, "n+1");
  for (std::int16_t v : {0, 1, 2, 3, 1, 0, 0, 1}) {
    bad.insert(bad.end(), reinterpret_cast<const char*>(&v),
               reinterpret_cast<const char*>(&v) + 2);
  }
  const std::string bad_path = tmp.file("l16_bad.nii");
  write_raw(bad_path, bad);
  CHECK_THROWS_AS((void)read_label(bad_path), ValidationError);
}

TEST_CASE("write/read round trip is bit-exact over randomized volumes") {
  testutil::TempDir tmp;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> dim_dist(1, 9);
  std::uniform_real_distribution<double> sp_dist(0.2, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims dims{dim_dist(rng), dim_dist(rng), dim_dist(rng)};
    const Spacing spacing{sp_dist(rng), sp_dist(rng), sp_dist(rng)};
    const bool gz = trial % 3 == 0;
    const std::string path = tmp.file("v" + std::to_string(trial) +
                                      (gz ? ".nii.gz" : ".nii"));
    if (trial % 2 == 0) {
      const Volume v = testutil::random_volume(rng, dims, spacing);
      write_nifti(v, path);
      const Volume r = read_volume(path);
      REQUIRE(r.dims() == v.dims());
      CHECK(std::memcmp(r.data().data(), v.data().data(),
                        v.data().size() * sizeof(float)) == 0);
      for (int a = 0; a < 3; ++a) {
        CHECK(r.spacing()[a] == double{static_cast<float>(v.spacing()[a])});
      }
    } else {
      const LabelVolume l = testutil::random_labels(rng, dims, spacing);
      write_nifti(l, path);
      const LabelVolume r = read_label(path);
      REQUIRE(r.dims() == l.dims());
      CHECK(r.data() == l.data());
    }
  }
}

TEST_CASE("labels are written as uint8 on disk") {
  testutil::TempDir tmp;
  const LabelVolume lbl({2, 2, 2}, {1, 1, 1}, {0, 1, 2, 0, 1, 2, 0, 1});
  const std::string path = tmp.file("lbl.nii");
  write_nifti(lbl, path);
  std::ifstream in(path, std::ios::binary);
  std::vector<char> header(348);
  in.read(header.data(), 348);
  std::int16_t datatype = 0;
  std::memcpy(&datatype, header.data() + 70, 2);
  CHECK(datatype == 2);  // DT_UINT8
  std::int16_t bitpix = 0;
  std::memcpy(&bitpix, header.data() + 72, 2);
  CHECK(bitpix == 8);
}

TEST_CASE("voxel (x,y,z) maps to flat index x + nx*(y + ny*z)") {
  testutil::TempDir tmp;
  const Dims dims{3, 4, 5};
  std::vector<float> ramp(static_cast<std::size_t>(voxel_count(dims)));
  for (std::int64_t z = 0; z < 5; ++z) {
    for (std::int64_t y = 0; y < 4; ++y) {
      for (std::int64_t x = 0; x < 3; ++x) {
        ramp[static_cast<std::size_t>(x + 3 * (y + 4 * z))] =
            static_cast<float>(x + 10 * y + 100 * z);
      }
    }
  }
  const Volume vol(dims, {1, 1, 1}, ramp);
  const std::string path = tmp.file("ramp3.nii");
  write_nifti(vol, path);
  const Volume r = read_volume(path);
  for (std::int64_t z = 0; z < 5; ++z) {
    for (std::int64_t y = 0; y < 4; ++y) {
      for (std::int64_t x = 0; x < 3; ++x) {
        CHECK(r.at(x, y, z) == float(x + 10 * y + 100 * z));
      }
    }
  }
}

TEST_CASE("gzip containers are transparent") {
  testutil::TempDir tmp;
  std::mt19937_64 rng(11);
  const Volume v = testutil::random_volume(rng, {4, 5, 6}, {0.41, 0.41, 1.5});
  const std::string path = tmp.file("v.nii.gz");
  write_nifti(v, path);
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[2] = {0, 0};
  in.read(reinterpret_cast<char*>(sig), 2);
  CHECK(sig[0] == 0x1f);
  CHECK(sig[1] == 0x8b);
  const Volume r = read_volume(path);
  CHECK(r.data() == v.data());
}

TEST_CASE("orientation fields survive a read/write cycle verbatim") {
  testutil::TempDir tmp;
  NiftiMeta meta;
  meta.qform_code = 1;
  meta.sform_code = 2;
  meta.quatern_b = 0.25f;
  meta.qoffset_x = -31.5f;
  meta.srow_x = {1.0f, 0.0f, 0.0f, -31.5f};
  meta.srow_y = {0.0f, 1.0f, 0.0f, 12.0f};
  meta.srow_z = {0.0f, 0.0f, 1.5f, 7.0f};
  const Volume vol({2, 2, 2}, {1, 1, 1.5}, std::vector<float>(8, 1.0f), meta);
  const std::string path = tmp.file("meta.nii");
  write_nifti(vol, path);
  const Volume r = read_volume(path);
  CHECK(r.meta().qform_code == 1);
  CHECK(r.meta().sform_code == 2);
  CHECK(r.meta().quatern_b == 0.25f);
  CHECK(r.meta().srow_z == std::array<float, 4>{0.0f, 0.0f, 1.5f, 7.0f});
}

TEST_CASE("probability maps round trip as 4D files") {
  testutil::TempDir tmp;
  const Dims dims{3, 3, 2};
  const std::int64_t n = voxel_count(dims);
  std::vector<float> data(static_cast<std::size_t>(3 * n));
  for (std::int64_t i = 0; i < n; ++i) {
    data[static_cast<std::size_t>(i)] = 0.5f;
    data[static_cast<std::size_t>(n + i)] = 0.3f;
    data[static_cast<std::size_t>(2 * n + i)] = 0.2f;
  }
  const ProbabilityMap map(3, dims, {1, 1, 1}, data);
  const std::string path = tmp.file("prob.nii.gz");
  write_nifti(map, path);
  const ProbabilityMap r = read_probability_map(path);
  CHECK(r.num_classes() == 3);
  CHECK(r.data() == map.data());
}

TEST_CASE("probability maps violating sum-to-one are rejected") {
  testutil::TempDir tmp;
  const Dims dims{2, 2, 1};
  const std::int64_t n = voxel_count(dims);
  std::vector<float> data(static_cast<std::size_t>(2 * n), 0.4f);  // sums to 0.8
  write_nifti_4d(dims, 2, {1, 1, 1}, data, {}, tmp.file("bad.nii"));
  CHECK_THROWS_AS((void)read_probability_map(tmp.file("bad.nii")), ValidationError);
}

TEST_CASE("volume invariants are enforced at construction") {
  CHECK_THROWS_AS(Volume({2, 2, 2}, {1, 1, 1}, std::vector<float>(7, 0.0f)), ShapeError);
  CHECK_THROWS_AS(Volume({2, 2, 2}, {0, 1, 1}, std::vector<float>(8, 0.0f)),
                  ValidationError);
  std::vector<float> with_nan(8, 0.0f);
  with_nan[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(Volume({2, 2, 2}, {1, 1, 1}, with_nan), ValidationError);
  CHECK_THROWS_AS(LabelVolume({2, 2, 2}, {1, 1, 1},
                              std::vector<std::uint8_t>{0, 1, 2, 3, 0, 0, 0, 0}),
                  ValidationError);
}
