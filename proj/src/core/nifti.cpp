#include "core/nifti.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>

namespace vsseg {

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

namespace {

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtUint16 = 512;

// NIfTI-1 header, 348 bytes, field offsets per the published standard.
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};

static_assert(sizeof(Nifti1Header) == 348);
static_assert(offsetof(Nifti1Header, dim) == 40);
static_assert(offsetof(Nifti1Header, datatype) == 70);
static_assert(offsetof(Nifti1Header, pixdim) == 76);
static_assert(offsetof(Nifti1Header, vox_offset) == 108);
static_assert(offsetof(Nifti1Header, qform_code) == 252);
static_assert(offsetof(Nifti1Header, srow_x) == 280);
static_assert(offsetof(Nifti1Header, magic) == 344);

struct GzFileCloser {
  void operator()(gzFile f) const {
    if (f != nullptr) gzclose(f);
  }
};

int element_size(std::int16_t datatype) {
  switch (datatype) {
    case kDtUint8:
      return 1;
    case kDtInt16:
    case kDtUint16:
      return 2;
    case kDtFloat32:
      return 4;
    default:
      return 0;
  }
}

struct RawNifti {
  Nifti1Header hdr;
  Dims dims;
  Spacing spacing;
  NiftiMeta meta;
  std::vector<char> bytes;  // payload for dims (x dim[4] for 4D)
  std::int64_t nvals = 0;
  bool scaled() const { return hdr.scl_slope != 0.0f; }
  bool identity_scale() const {
    return hdr.scl_slope == 0.0f || (hdr.scl_slope == 1.0f && hdr.scl_inter == 0.0f);
  }
};

void read_exact(gzFile f, void* dst, std::size_t n, const char* what) {
  std::size_t done = 0;
  auto* p = static_cast<char*>(dst);
  while (done < n) {
    const unsigned chunk = static_cast<unsigned>(
        std::min<std::size_t>(n - done, std::numeric_limits<int>::max() / 2));
    const int got = gzread(f, p + done, chunk);
    if (got <= 0) throw FormatError(std::string(what) + " truncated");
    done += static_cast<std::size_t>(got);
  }
}

NiftiMeta meta_from_header(const Nifti1Header& h) {
  NiftiMeta m;
  m.qfac = h.pixdim[0];
  m.qform_code = h.qform_code;
  m.sform_code = h.sform_code;
  m.quatern_b = h.quatern_b;
  m.quatern_c = h.quatern_c;
  m.quatern_d = h.quatern_d;
  m.qoffset_x = h.qoffset_x;
  m.qoffset_y = h.qoffset_y;
  m.qoffset_z = h.qoffset_z;
  std::memcpy(m.srow_x.data(), h.srow_x, sizeof(h.srow_x));
  std::memcpy(m.srow_y.data(), h.srow_y, sizeof(h.srow_y));
  std::memcpy(m.srow_z.data(), h.srow_z, sizeof(h.srow_z));
  return m;
}

RawNifti read_raw(const std::string& path, int expected_ndim) {
  // zlib reads uncompressed files transparently, so one path covers both.
  std::unique_ptr<gzFile_s, GzFileCloser> file(gzopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path);

  RawNifti raw{};
  read_exact(file.get(), &raw.hdr, sizeof(raw.hdr), "header");
  const Nifti1Header& h = raw.hdr;

  if (h.sizeof_hdr != 348) {
    if (h.sizeof_hdr == 0x5C010000) {
      throw FormatError("sizeof_hdr is byte-swapped (big-endian file): " + path);
    }
    throw FormatError("sizeof_hdr = " + std::to_string(h.sizeof_hdr) +
                      " (expected 348): " + path);
  }
  if (std::memcmp(h.magic, "ni1", 4) == 0) {
    throw UnsupportedError("two-file NIfTI-1 (magic \"ni1\") is not supported: " + path);
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0) {
    throw FormatError("magic is neither \"n+1\" nor \"ni1\": " + path);
  }
  if (element_size(h.datatype) == 0) {
    throw UnsupportedError("datatype code " + std::to_string(h.datatype) +
                           " not supported (uint8/int16/uint16/float32 only): " + path);
  }
  if (h.bitpix != element_size(h.datatype) * 8) {
    throw FormatError("bitpix = " + std::to_string(h.bitpix) +
                      " contradicts datatype " + std::to_string(h.datatype) + ": " + path);
  }
  if (h.dim[0] != expected_ndim) {
    throw DimensionError("dim[0] = " + std::to_string(h.dim[0]) + ", expected " +
                         std::to_string(expected_ndim) + "-D: " + path);
  }
  for (int a = 1; a <= expected_ndim; ++a) {
    if (h.dim[a] < 1) {
      throw FormatError("dim[" + std::to_string(a) + "] = " + std::to_string(h.dim[a]) +
                        " is not positive: " + path);
    }
  }
  for (int a = 1; a <= 3; ++a) {
    if (!(h.pixdim[a] > 0.0f) || !std::isfinite(h.pixdim[a])) {
      throw FormatError("pixdim[" + std::to_string(a) + "] must be positive and finite: " +
                        path);
    }
  }
  if (!(h.vox_offset >= 348.0f)) {
    throw FormatError("vox_offset = " + std::to_string(h.vox_offset) +
                      " < 348 in single-file NIfTI: " + path);
  }

  raw.dims = {h.dim[1], h.dim[2], h.dim[3]};
  raw.spacing = {h.pixdim[1], h.pixdim[2], h.pixdim[3]};
  raw.meta = meta_from_header(h);
  raw.nvals = voxel_count(raw.dims) * (expected_ndim == 4 ? h.dim[4] : 1);

  const auto offset = static_cast<z_off_t>(h.vox_offset);
  if (gzseek(file.get(), offset, SEEK_SET) < 0) {
    throw FormatError("cannot seek to vox_offset: " + path);
  }
  raw.bytes.resize(static_cast<std::size_t>(raw.nvals) * element_size(h.datatype));
  read_exact(file.get(), raw.bytes.data(), raw.bytes.size(), "voxel data");
  return raw;
}

template <typename T>
void decode_to_float(const RawNifti& raw, std::vector<float>& out) {
  const T* src = reinterpret_cast<const T*>(raw.bytes.data());
  const float slope = raw.hdr.scl_slope;
  const float inter = raw.hdr.scl_inter;
  out.resize(static_cast<std::size_t>(raw.nvals));
  if (raw.scaled()) {
    for (std::int64_t i = 0; i < raw.nvals; ++i) {
      out[static_cast<std::size_t>(i)] = static_cast<float>(src[i]) * slope + inter;
    }
  } else {
    for (std::int64_t i = 0; i < raw.nvals; ++i) {
      out[static_cast<std::size_t>(i)] = static_cast<float>(src[i]);
    }
  }
}

std::vector<float> decode_floats(const RawNifti& raw) {
  std::vector<float> out;
  switch (raw.hdr.datatype) {
    case kDtUint8:
      decode_to_float<std::uint8_t>(raw, out);
      break;
    case kDtInt16:
      decode_to_float<std::int16_t>(raw, out);
      break;
    case kDtUint16:
      decode_to_float<std::uint16_t>(raw, out);
      break;
    case kDtFloat32:
      decode_to_float<float>(raw, out);
      break;
  }
  return out;
}

std::vector<std::uint8_t> decode_labels(const RawNifti& raw, const std::string& path) {
  const std::vector<float> vals = decode_floats(raw);
  std::vector<std::uint8_t> out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const float v = vals[i];
    const float r = std::round(v);
    if (std::abs(v - r) > 1e-6f || r < 0.0f || r > 2.0f) {
      throw ValidationError("label value " + std::to_string(v) + " at flat index " +
                            std::to_string(i) + " is not in {0,1,2}: " + path);
    }
    out[i] = static_cast<std::uint8_t>(r);
  }
  return out;
}

Nifti1Header make_header(const Dims& dims, int nt, const Spacing& spacing,
                         const NiftiMeta& meta, std::int16_t datatype) {
  Nifti1Header h;
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = static_cast<std::int16_t>(nt > 0 ? 4 : 3);
  h.dim[1] = static_cast<std::int16_t>(dims[0]);
  h.dim[2] = static_cast<std::int16_t>(dims[1]);
  h.dim[3] = static_cast<std::int16_t>(dims[2]);
  h.dim[4] = static_cast<std::int16_t>(nt > 0 ? nt : 1);
  for (int a = 5; a < 8; ++a) h.dim[a] = 1;
  h.datatype = datatype;
  h.bitpix = static_cast<std::int16_t>(element_size(datatype) * 8);
  h.pixdim[0] = meta.qfac == 0.0f ? 1.0f : meta.qfac;
  h.pixdim[1] = static_cast<float>(spacing[0]);
  h.pixdim[2] = static_cast<float>(spacing[1]);
  h.pixdim[3] = static_cast<float>(spacing[2]);
  h.pixdim[4] = nt > 0 ? 1.0f : 0.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 0.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // NIFTI_UNITS_MM
  std::strncpy(h.descrip, "vsseg", sizeof(h.descrip) - 1);
  h.qform_code = meta.qform_code;
  h.sform_code = meta.sform_code;
  h.quatern_b = meta.quatern_b;
  h.quatern_c = meta.quatern_c;
  h.quatern_d = meta.quatern_d;
  h.qoffset_x = meta.qoffset_x;
  h.qoffset_y = meta.qoffset_y;
  h.qoffset_z = meta.qoffset_z;
  std::memcpy(h.srow_x, meta.srow_x.data(), sizeof(h.srow_x));
  std::memcpy(h.srow_y, meta.srow_y.data(), sizeof(h.srow_y));
  std::memcpy(h.srow_z, meta.srow_z.data(), sizeof(h.srow_z));
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

bool has_gz_suffix(const std::string& path) {
  return path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

void write_blob(const std::string& path, const Nifti1Header& h, const void* data,
                std::size_t nbytes) {
  for (int a = 1; a <= 4; ++a) {
    // int16 header fields cap each axis at 32767
    if (h.dim[a] < 1) throw ShapeError("dimension overflows NIfTI-1 int16 dim field");
  }
  const char extension[4] = {0, 0, 0, 0};
  if (has_gz_suffix(path)) {
    std::unique_ptr<gzFile_s, GzFileCloser> file(gzopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot open " + path + " for writing");
    if (gzwrite(file.get(), &h, sizeof(h)) != static_cast<int>(sizeof(h)) ||
        gzwrite(file.get(), extension, 4) != 4) {
      throw IoError("short write on " + path);
    }
    std::size_t done = 0;
    const char* p = static_cast<const char*>(data);
    while (done < nbytes) {
      const unsigned chunk = static_cast<unsigned>(
          std::min<std::size_t>(nbytes - done, 1u << 30));
      if (gzwrite(file.get(), p + done, chunk) != static_cast<int>(chunk)) {
        throw IoError("short write on " + path);
      }
      done += chunk;
    }
  } else {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(extension, 4);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(nbytes));
    if (!out) throw IoError("short write on " + path);
  }
}

void check_dim_fits(const Dims& dims, int nt) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] > 32767) throw ShapeError("axis length exceeds NIfTI-1 limit of 32767");
  }
  if (nt > 32767) throw ShapeError("class count exceeds NIfTI-1 limit of 32767");
}

}  // namespace

NiftiVariant read_nifti(const std::string& path) {
  const RawNifti raw = read_raw(path, 3);
  if (raw.hdr.datatype == kDtUint8 && raw.identity_scale()) {
    const auto* v = reinterpret_cast<const std::uint8_t*>(raw.bytes.data());
    bool label_like = true;
    for (std::int64_t i = 0; i < raw.nvals; ++i) {
      if (v[i] > 2) {
        label_like = false;
        break;
      }
    }
    if (label_like) {
      return LabelVolume(raw.dims, raw.spacing,
                         std::vector<std::uint8_t>(v, v + raw.nvals), raw.meta);
    }
  }
  return Volume(raw.dims, raw.spacing, decode_floats(raw), raw.meta);
}

Volume read_volume(const std::string& path) {
  const RawNifti raw = read_raw(path, 3);
  return Volume(raw.dims, raw.spacing, decode_floats(raw), raw.meta);
}

LabelVolume read_label(const std::string& path) {
  const RawNifti raw = read_raw(path, 3);
  return LabelVolume(raw.dims, raw.spacing, decode_labels(raw, path), raw.meta);
}

ProbabilityMap read_probability_map(const std::string& path) {
  const RawNifti raw = read_raw(path, 4);
  const int num_classes = raw.hdr.dim[4];
  std::vector<float> vals = decode_floats(raw);
  try {
    return ProbabilityMap(num_classes, raw.dims, raw.spacing, std::move(vals), raw.meta);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()) + ": " + path);
  }
}

void write_nifti(const Volume& vol, const std::string& path) {
  check_dim_fits(vol.dims(), 0);
  const Nifti1Header h = make_header(vol.dims(), 0, vol.spacing(), vol.meta(), kDtFloat32);
  write_blob(path, h, vol.data().data(), vol.data().size() * sizeof(float));
}

void write_nifti(const LabelVolume& lbl, const std::string& path) {
  check_dim_fits(lbl.dims(), 0);
  const Nifti1Header h = make_header(lbl.dims(), 0, lbl.spacing(), lbl.meta(), kDtUint8);
  write_blob(path, h, lbl.data().data(), lbl.data().size());
}

void write_nifti(const ProbabilityMap& map, const std::string& path) {
  check_dim_fits(map.dims(), map.num_classes());
  const Nifti1Header h =
      make_header(map.dims(), map.num_classes(), map.spacing(), map.meta(), kDtFloat32);
  write_blob(path, h, map.data().data(), map.data().size() * sizeof(float));
}

void write_nifti_4d(const Dims& dims, int nt, const Spacing& spacing,
                    const std::vector<float>& data, const NiftiMeta& meta,
                    const std::string& path) {
  check_dims_positive(dims);
  check_dim_fits(dims, nt);
  if (nt < 1 || static_cast<std::int64_t>(data.size()) != voxel_count(dims) * nt) {
    throw ShapeError("4D data length does not match dims * nt");
  }
  const Nifti1Header h = make_header(dims, nt, spacing, meta, kDtFloat32);
  write_blob(path, h, data.data(), data.size() * sizeof(float));
}

}  // namespace vsseg
