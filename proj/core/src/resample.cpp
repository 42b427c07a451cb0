#include "qxfer/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qxfer/error.hpp"
#include "qxfer/parallel.hpp"

namespace qxfer {
namespace {

std::string voxel_name(const Volume& v, std::size_t voxel) {
  const auto& d = v.dims();
  const std::size_t x = voxel % d[0];
  const std::size_t y = (voxel / d[0]) % d[1];
  const std::size_t z = voxel / (d[0] * d[1]);
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ", " + std::to_string(z) + ")";
}

void check_mask_grid(const Volume& image, const Volume& mask) {
  require_mask(mask);
  if (!image.same_grid(mask)) throw DataError("mask dimensions do not match the image");
}

// Voxel-parallel driver: body(voxel, in, out) for every masked voxel.
template <typename Body>
void for_masked_voxels(const Volume& in_image, const Volume& mask, Volume& out_image,
                       std::size_t threads, Body body) {
  const std::size_t n_in = in_image.volumes();
  const std::size_t n_out = out_image.volumes();
  const auto mask_data = mask.data();
  parallel_for(in_image.voxel_count(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> in(n_in);
    std::vector<double> out(n_out);
    for (std::size_t v = begin; v < end; ++v) {
      if (mask_data[v] == 0.0) continue;
      in_image.read_signal(v, in);
      for (double s : in) {
        if (!std::isfinite(s)) {
          throw DataError("non-finite signal at voxel " + voxel_name(in_image, v));
        }
      }
      body(v, in, out);
      out_image.write_signal(v, out);
    }
  });
}

}  // namespace

NormalizedDwi normalize_b0(const DwiVolume& dwi) {
  dwi.validate();
  const auto b0 = dwi.scheme.b0_indices();
  const auto dw = dwi.scheme.dw_indices();
  if (b0.empty()) throw DataError("gradient scheme has no b0 entries to normalize by");

  const Volume& img = dwi.image;
  const std::size_t n = img.voxel_count();

  VolumeHeader map_header = img.header();
  map_header.volumes = 1;
  NormalizedDwi out{
      .dwi = {},
      .b0_map = Volume(map_header),
      .excluded = Volume(map_header),
  };
  out.excluded.header().datatype = DataType::UInt8;

  auto b0_map = out.b0_map.data();
  for (std::size_t v : b0) {
    for (std::size_t i = 0; i < n; ++i) b0_map[i] += img.data()[i + n * v];
  }
  for (double& x : b0_map) x /= static_cast<double>(b0.size());

  VolumeHeader dw_header = img.header();
  dw_header.volumes = dw.size();
  Volume normalized(dw_header);
  for (std::size_t k = 0; k < dw.size(); ++k) {
    const std::size_t src = dw[k];
    for (std::size_t i = 0; i < n; ++i) {
      normalized.data()[i + n * k] = b0_map[i] > 0.0 ? img.data()[i + n * src] / b0_map[i] : 0.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.excluded.data()[i] = b0_map[i] > 0.0 ? 0.0 : 1.0;

  out.dwi = DwiVolume{std::move(normalized), dwi.scheme.subset(dw)};
  return out;
}

Index3 downsampled_dims(const Index3& dims, int gamma) {
  if (gamma < 1) throw std::invalid_argument("downsampling factor must be >= 1");
  Index3 out{};
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < static_cast<std::size_t>(gamma)) {
      throw DataError("axis " + std::to_string(a) + " (" + std::to_string(dims[a]) +
                      " voxels) is shorter than the downsampling factor " + std::to_string(gamma));
    }
    out[a] = dims[a] / static_cast<std::size_t>(gamma);
  }
  return out;
}

Volume block_mean_downsample(const Volume& volume, int gamma) {
  const Index3 out_dims = downsampled_dims(volume.dims(), gamma);
  const auto g = static_cast<std::size_t>(gamma);

  VolumeHeader h = volume.header();
  h.dims = out_dims;
  for (int a = 0; a < 3; ++a) h.voxel_size[a] *= gamma;
  // Output voxel centres sit at the centres of their blocks.
  const Eigen::Matrix4d old_sform = volume.header().sform;
  for (int a = 0; a < 3; ++a) h.sform.col(a) = old_sform.col(a) * gamma;
  h.sform.col(3) = old_sform * Eigen::Vector4d(0.5 * (gamma - 1), 0.5 * (gamma - 1),
                                               0.5 * (gamma - 1), 1.0);
  h.description = "block-mean x" + std::to_string(gamma) + " crop " +
                  std::to_string(volume.dims()[0] - out_dims[0] * g) + "," +
                  std::to_string(volume.dims()[1] - out_dims[1] * g) + "," +
                  std::to_string(volume.dims()[2] - out_dims[2] * g);
  if (h.datatype == DataType::UInt8) h.datatype = DataType::Float32;

  Volume out(h);
  const double scale = 1.0 / static_cast<double>(g * g * g);
  for (std::size_t v = 0; v < volume.volumes(); ++v) {
    for (std::size_t z = 0; z < out_dims[2]; ++z)
      for (std::size_t y = 0; y < out_dims[1]; ++y)
        for (std::size_t x = 0; x < out_dims[0]; ++x) {
          double sum = 0.0;
          for (std::size_t dz = 0; dz < g; ++dz)
            for (std::size_t dy = 0; dy < g; ++dy)
              for (std::size_t dx = 0; dx < g; ++dx)
                sum += volume.at(g * x + dx, g * y + dy, g * z + dz, v);
          out.at(x, y, z, v) = sum * scale;
        }
  }
  return out;
}

Volume downsample_mask(const Volume& mask, int gamma) {
  require_mask(mask);
  Volume out = block_mean_downsample(mask, gamma);
  for (double& x : out.data()) x = x >= 0.5 ? 1.0 : 0.0;
  out.header().datatype = DataType::UInt8;
  return out;
}

Volume block_upsample(const Volume& volume, int gamma) {
  if (gamma < 1) throw std::invalid_argument("upsampling factor must be >= 1");
  const auto g = static_cast<std::size_t>(gamma);
  VolumeHeader h = volume.header();
  for (int a = 0; a < 3; ++a) {
    h.dims[a] *= g;
    h.voxel_size[a] /= gamma;
  }
  const Eigen::Matrix4d old_sform = volume.header().sform;
  for (int a = 0; a < 3; ++a) h.sform.col(a) = old_sform.col(a) / gamma;
  const double shift = -0.5 * (gamma - 1) / gamma;
  h.sform.col(3) = old_sform * Eigen::Vector4d(shift, shift, shift, 1.0);
  Volume out(h);
  for (std::size_t v = 0; v < volume.volumes(); ++v)
    for (std::size_t z = 0; z < h.dims[2]; ++z)
      for (std::size_t y = 0; y < h.dims[1]; ++y)
        for (std::size_t x = 0; x < h.dims[0]; ++x)
          out.at(x, y, z, v) = volume.at(x / g, y / g, z / g, v);
  return out;
}

DwiVolume resample_qspace(const DwiVolume& source, const Volume& mask,
                          const ShoreBasisSpec& spec, const GradientScheme& target,
                          const ResampleOptions& options) {
  source.validate();
  check_mask_grid(source.image, mask);

  const ShoreInterpolator interp(source.scheme, target, spec);

  VolumeHeader h = source.image.header();
  h.volumes = target.size();
  if (h.datatype == DataType::UInt8) h.datatype = DataType::Float32;
  DwiVolume out{Volume(h), target};

  const double clip = options.clip_max;
  for_masked_voxels(source.image, mask, out.image, options.threads,
                    [&](std::size_t, std::span<const double> in, std::span<double> res) {
                      interp.apply(in, res);
                      if (clip > 0.0) {
                        for (double& x : res) x = std::clamp(x, 0.0, clip);
                      }
                    });
  return out;
}

Volume fit_shore_volume(const DwiVolume& source, const Volume& mask, const ShoreBasisSpec& spec,
                        std::size_t threads) {
  source.validate();
  check_mask_grid(source.image, mask);
  const DesignMatrix design = design_matrix(source.scheme, spec);
  const ShoreFitter fitter(design, RegularizerSpec::from_index_set(design.index_set),
                           spec.lambda_l, spec.lambda_n);

  VolumeHeader h = source.image.header();
  h.volumes = fitter.coefficient_length();
  h.datatype = DataType::Float64;
  h.description = "SHORE N=" + std::to_string(spec.radial_order) + " L=" +
                  std::to_string(spec.radial_order);
  Volume out(h);
  for_masked_voxels(source.image, mask, out, threads,
                    [&](std::size_t, std::span<const double> in, std::span<double> res) {
                      fitter.fit(in, res);
                    });
  return out;
}

}  // namespace qxfer
