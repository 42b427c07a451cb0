#pragma once

#include <cstddef>

#include "qxfer/scheme.hpp"
#include "qxfer/shore.hpp"
#include "qxfer/volume.hpp"

namespace qxfer {

struct NormalizedDwi {
  DwiVolume dwi;     // diffusion-weighted volumes only, divided by b0_map
  Volume b0_map;     // mean of the b0 volumes
  Volume excluded;   // 1 where b0_map <= 0 (signal set to 0 there)
};

/// Divides each diffusion-weighted volume by the mean b0 image and drops the
/// b0 volumes. Throws DataError when the scheme has no b0 entry.
NormalizedDwi normalize_b0(const DwiVolume& dwi);

/// Spatial block-mean downsampling by an integer factor. Each axis is first
/// cropped to the largest multiple of gamma; each output voxel is the mean of
/// its gamma^3 block, independently per volume. Voxel size and sform are
/// scaled accordingly and the crop is recorded in the header description.
/// Throws std::invalid_argument for gamma < 1 and DataError when an axis is
/// shorter than gamma.
Volume block_mean_downsample(const Volume& volume, int gamma);

/// Block mean of a binary mask thresholded at 0.5.
Volume downsample_mask(const Volume& mask, int gamma);

/// Nearest-neighbour upsampling by gamma (each voxel becomes a gamma^3 block).
Volume block_upsample(const Volume& volume, int gamma);

/// Volumes of the downsampled image when the input has dims `dims`.
Index3 downsampled_dims(const Index3& dims, int gamma);

struct ResampleOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  // Clamp interpolated values to [0, clip_max] when clip_max > 0.
  double clip_max = 0.0;
};

/// Fits each masked voxel of a b0-normalized volume in the SHORE basis and
/// evaluates the fit on the target scheme. Unmasked voxels are 0. The
/// per-voxel map is linear; all voxels share one factored system.
/// Solver and data errors name the offending voxel.
DwiVolume resample_qspace(const DwiVolume& source, const Volume& mask,
                          const ShoreBasisSpec& spec, const GradientScheme& target,
                          const ResampleOptions& options = {});

/// SHORE coefficients of every masked voxel as a K-volume image.
Volume fit_shore_volume(const DwiVolume& source, const Volume& mask, const ShoreBasisSpec& spec,
                        std::size_t threads = 0);

}  // namespace qxfer
