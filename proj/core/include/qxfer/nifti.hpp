#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "qxfer/volume.hpp"

namespace qxfer {

/// Single-file NIfTI-1 (.nii) codec.
///
/// Reading accepts either byte order (detected from sizeof_hdr), the
/// datatypes in DataType, and up to four dimensions. Values are returned as
/// doubles in x-fastest order with scl_slope/scl_inter applied when set.
/// Writing produces little-endian files with vox_offset 352, sform_code 1,
/// qform_code 0 and no intensity scaling.
struct NiftiImage {
  VolumeHeader header;
  std::vector<double> data;
};

inline constexpr std::size_t kNiftiHeaderSize = 348;
inline constexpr std::size_t kNiftiDataOffset = 352;

NiftiImage read_nifti(std::span<const std::byte> bytes);
std::vector<std::byte> write_nifti(const VolumeHeader& header, std::span<const double> data);

Volume load_volume(const std::filesystem::path& path);
void save_volume(const std::filesystem::path& path, const Volume& volume);

}  // namespace qxfer
