#include "qxfer/volume.hpp"

#include <cmath>

#include "qxfer/error.hpp"

namespace qxfer {

std::size_t element_size(DataType type) {
  switch (type) {
    case DataType::UInt8: return 1;
    case DataType::Float32: return 4;
    case DataType::Float64: return 8;
  }
  throw DataError("unsupported datatype");
}

VolumeHeader VolumeHeader::make(Index3 dims, std::size_t volumes,
                                std::array<double, 3> voxel_size, DataType datatype) {
  VolumeHeader h;
  h.dims = dims;
  h.volumes = volumes;
  h.voxel_size = voxel_size;
  h.datatype = datatype;
  h.sform = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 3; ++i) h.sform(i, i) = voxel_size[i];
  return h;
}

Volume::Volume(VolumeHeader header, double fill)
    : header_(std::move(header)), data_(header_.element_count(), fill) {}

Volume::Volume(VolumeHeader header, std::vector<double> data)
    : header_(std::move(header)), data_(std::move(data)) {
  if (data_.size() != header_.element_count()) {
    throw DataError("volume data has " + std::to_string(data_.size()) +
                    " elements, header describes " + std::to_string(header_.element_count()));
  }
}

void Volume::read_signal(std::size_t voxel, std::span<double> out) const {
  const std::size_t stride = voxel_count();
  for (std::size_t v = 0; v < header_.volumes; ++v) out[v] = data_[voxel + stride * v];
}

void Volume::write_signal(std::size_t voxel, std::span<const double> values) {
  const std::size_t stride = voxel_count();
  for (std::size_t v = 0; v < header_.volumes; ++v) data_[voxel + stride * v] = values[v];
}

Volume Volume::extract_volume(std::size_t v) const {
  if (v >= header_.volumes) throw DataError("volume index out of range");
  VolumeHeader h = header_;
  h.volumes = 1;
  const std::size_t n = voxel_count();
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(n * v),
                          data_.begin() + static_cast<std::ptrdiff_t>(n * (v + 1)));
  return Volume(std::move(h), std::move(out));
}

bool is_binary(const Volume& v) {
  for (double x : v.data())
    if (x != 0.0 && x != 1.0) return false;
  return true;
}

void require_mask(const Volume& v, const char* what) {
  if (v.volumes() != 1) throw DataError(std::string(what) + " must be a 3D volume");
  if (!is_binary(v)) throw DataError(std::string(what) + " must contain only 0 and 1");
}

void DwiVolume::validate() const {
  if (scheme.size() != image.volumes()) {
    throw DataError("gradient scheme has " + std::to_string(scheme.size()) +
                    " entries but the image has " + std::to_string(image.volumes()) + " volumes");
  }
  for (double x : image.data())
    if (!std::isfinite(x)) throw DataError("diffusion data contain non-finite values");
}

}  // namespace qxfer
