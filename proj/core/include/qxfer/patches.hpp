#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qxfer/volume.hpp"

namespace qxfer {

enum class PatchMode : std::uint32_t { QDL = 0, SR = 1 };

/// Shape of one training pair.
///
/// Input layout: the in_size^3 neighbourhood of the centre voxel, voxels
/// ordered x fastest then y then z, and for each voxel its n_signals values
/// (voxel-major, then gradient). Target layout: out_size^3 voxels in the same
/// order, each with n_measures values.
///
/// QDL: the target block is centred on the input centre (out_size odd).
/// SR: the target block of low-resolution centre (i, j, k) spans the
/// high-resolution voxels [gamma*i, gamma*i + gamma) per axis, out_size == gamma.
struct PatchGeometry {
  PatchMode mode = PatchMode::QDL;
  int in_size = 3;
  int out_size = 1;
  int gamma = 1;
  std::size_t n_signals = 0;
  std::size_t n_measures = 0;

  std::size_t input_length() const;
  std::size_t target_length() const;
  /// Throws std::invalid_argument on inconsistent sizes.
  void validate() const;

  static PatchGeometry qdl(std::size_t n_signals, std::size_t n_measures, int in_size = 3,
                           int out_size = 1);
  static PatchGeometry sr(std::size_t n_signals, std::size_t n_measures, int gamma = 2,
                          int in_size = 5, int out_size = 2);

  friend bool operator==(const PatchGeometry&, const PatchGeometry&) = default;
};

struct PatchSample {
  std::vector<double> input;
  std::vector<double> target;
  Index3 center{};
};

/// Homogeneous training pairs stored contiguously (sample-major).
class SampleSet {
 public:
  SampleSet() = default;
  explicit SampleSet(PatchGeometry geometry);

  const PatchGeometry& geometry() const { return geometry_; }
  std::size_t size() const { return centers_.size(); }
  bool empty() const { return centers_.empty(); }

  void reserve(std::size_t n);
  void push_back(const PatchSample& sample);
  /// Appends and returns writable input/target slots for the new sample.
  std::pair<std::span<double>, std::span<double>> emplace(const Index3& center);
  /// Appends every sample of another set with the same geometry.
  void append(const SampleSet& other);

  std::span<const double> input(std::size_t i) const;
  std::span<const double> target(std::size_t i) const;
  const Index3& center(std::size_t i) const { return centers_[i]; }
  PatchSample sample(std::size_t i) const;

  /// All inputs, sample-major (input_length() values per sample).
  std::span<const double> inputs() const { return inputs_; }
  std::span<const double> targets() const { return targets_; }

 private:
  PatchGeometry geometry_;
  std::vector<double> inputs_;
  std::vector<double> targets_;
  std::vector<Index3> centers_;
};

/// Centres (lexicographic, x fastest) of mask voxels whose full
/// in_size^3 neighbourhood lies inside the array. `stride` subsamples the
/// centre grid.
std::vector<Index3> eligible_centers(const Volume& mask, int in_size, std::size_t stride = 1);

/// Copies the input patch at `center` into `out` (input_length() values).
void gather_input(const Volume& signals, const Index3& center, int in_size, std::span<double> out);

SampleSet extract_qdl(const DwiVolume& signals, std::span<const Volume> measures,
                      const Volume& mask, int in_size = 3, int out_size = 1);

SampleSet extract_sr(const DwiVolume& lr_signals, std::span<const Volume> hr_measures,
                     const Volume& lr_mask, int gamma = 2, int in_size = 5, int out_size = 2);

struct PatchPrediction {
  Index3 center{};
  std::vector<double> values;  // target layout
};

/// Scatters predicted target blocks into n_measures maps of size out_dims.
/// Voxels covered more than once receive the mean; uncovered voxels are 0.
std::vector<Volume> assemble(std::span<const PatchPrediction> predictions,
                             const PatchGeometry& geometry, const Index3& out_dims);

/// 1 on every output voxel written by the target block of some centre.
Volume coverage_mask(std::span<const Index3> centers, const PatchGeometry& geometry,
                     const Index3& out_dims);

/// Flat binary sample file, little-endian:
///   char[8] "QXSMPL01"
///   u32 mode, u32 in_size, u32 out_size, u32 gamma
///   u64 n_signals, u64 n_measures, u64 sample_count
///   sample_count x (u32 x, u32 y, u32 z)           centres
///   sample_count x input_length() float32           inputs
///   sample_count x target_length() float32          targets
void save_samples(const std::filesystem::path& path, const SampleSet& samples);
SampleSet load_samples(const std::filesystem::path& path);

}  // namespace qxfer
