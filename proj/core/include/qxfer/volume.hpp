#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qxfer/scheme.hpp"

namespace qxfer {

using Index3 = std::array<std::size_t, 3>;

/// On-disk element types supported by the NIfTI codec (NIfTI-1 codes).
enum class DataType : std::int16_t { UInt8 = 2, Float32 = 16, Float64 = 64 };

std::size_t element_size(DataType type);

/// Extents, spacing and placement of a 3D or 4D array.
struct VolumeHeader {
  Index3 dims{1, 1, 1};
  std::size_t volumes = 1;  // 4th extent
  std::array<double, 3> voxel_size{1.0, 1.0, 1.0};  // mm
  DataType datatype = DataType::Float32;
  Eigen::Matrix4d sform = Eigen::Matrix4d::Identity();  // voxel -> world (mm)
  std::string description;  // at most 79 characters survive a write

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t element_count() const { return voxel_count() * volumes; }

  /// A header with an axis-aligned sform built from voxel_size.
  static VolumeHeader make(Index3 dims, std::size_t volumes = 1,
                           std::array<double, 3> voxel_size = {1.0, 1.0, 1.0},
                           DataType datatype = DataType::Float32);
};

/// Real-valued 3D or 4D array, x fastest, then y, z and volume.
class Volume {
 public:
  Volume() = default;
  explicit Volume(VolumeHeader header, double fill = 0.0);
  Volume(VolumeHeader header, std::vector<double> data);

  const VolumeHeader& header() const { return header_; }
  VolumeHeader& header() { return header_; }
  const Index3& dims() const { return header_.dims; }
  std::size_t volumes() const { return header_.volumes; }
  std::size_t voxel_count() const { return header_.voxel_count(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::size_t voxel_index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + header_.dims[0] * (y + header_.dims[1] * z);
  }
  double& at(std::size_t x, std::size_t y, std::size_t z, std::size_t v = 0) {
    return data_[voxel_index(x, y, z) + voxel_count() * v];
  }
  double at(std::size_t x, std::size_t y, std::size_t z, std::size_t v = 0) const {
    return data_[voxel_index(x, y, z) + voxel_count() * v];
  }
  double& at(const Index3& p, std::size_t v = 0) { return at(p[0], p[1], p[2], v); }
  double at(const Index3& p, std::size_t v = 0) const { return at(p[0], p[1], p[2], v); }

  /// All volumes at one voxel.
  void read_signal(std::size_t voxel, std::span<double> out) const;
  void write_signal(std::size_t voxel, std::span<const double> values);

  /// One volume of a 4D array as a 3D volume.
  Volume extract_volume(std::size_t v) const;

  bool same_grid(const Volume& other) const { return dims() == other.dims(); }

 private:
  VolumeHeader header_;
  std::vector<double> data_;
};

/// True when every value is exactly 0 or 1.
bool is_binary(const Volume& v);
/// Throws DataError unless v is a single-volume binary array.
void require_mask(const Volume& v, const char* what = "mask");

/// Diffusion-weighted 4D data with the gradient scheme of its volumes.
struct DwiVolume {
  Volume image;
  GradientScheme scheme;

  /// Throws DataError when the scheme length differs from the 4th extent
  /// or the data contain non-finite values.
  void validate() const;
};

}  // namespace qxfer
