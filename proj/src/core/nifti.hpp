#pragma once

#include <string>
#include <variant>

#include "core/types.hpp"

namespace vsseg {

using NiftiVariant = std::variant<Volume, LabelVolume>;

// Reads a single-file NIfTI-1 volume (optionally gzip-compressed). Returns a
// LabelVolume when the file stores unscaled uint8 values <= 2, a Volume
// otherwise. Supported datatypes: uint8, int16, uint16, float32.
NiftiVariant read_nifti(const std::string& path);

// Reads as float intensities regardless of the on-disk datatype.
Volume read_volume(const std::string& path);

// Reads a label mask; accepts uint8/int16/uint16 files whose values are in
// {0,1,2} and normalizes them to uint8.
LabelVolume read_label(const std::string& path);

// Reads a 4D file (dim[0] = 4) as a class-major probability map and checks
// the per-voxel sum-to-one invariant.
ProbabilityMap read_probability_map(const std::string& path);

// Writers emit little-endian single-file NIfTI-1 (magic "n+1", vox_offset
// 352); a ".gz" suffix selects gzip output. Volumes store float32, labels
// uint8. read(write(v)) reproduces data bit-exactly and spacing to float32
// precision.
void write_nifti(const Volume& vol, const std::string& path);
void write_nifti(const LabelVolume& lbl, const std::string& path);
void write_nifti(const ProbabilityMap& map, const std::string& path);

// 4D float writer without probability validation (loss gradients etc.).
void write_nifti_4d(const Dims& dims, int nt, const Spacing& spacing,
                    const std::vector<float>& data, const NiftiMeta& meta,
                    const std::string& path);

}  // namespace vsseg
