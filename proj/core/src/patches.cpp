#include "qxfer/patches.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "qxfer/error.hpp"

namespace qxfer {
namespace {

constexpr char kSampleMagic[8] = {'Q', 'X', 'S', 'M', 'P', 'L', '0', '1'};

std::size_t cube(int n) {
  const auto s = static_cast<std::size_t>(n);
  return s * s * s;
}

void check_measures(std::span<const Volume> measures, const Index3& dims, const char* grid) {
  if (measures.empty()) throw DataError("at least one measure map is required");
  for (const Volume& m : measures) {
    if (m.volumes() != 1) throw DataError("measure maps must be 3D");
    if (m.dims() != dims) {
      throw DataError(std::string("measure map dimensions do not match the ") + grid + " grid");
    }
  }
}

}  // namespace

std::size_t PatchGeometry::input_length() const { return cube(in_size) * n_signals; }
std::size_t PatchGeometry::target_length() const { return cube(out_size) * n_measures; }

void PatchGeometry::validate() const {
  if (in_size < 1 || in_size % 2 == 0) throw std::invalid_argument("input patch size must be odd");
  if (out_size < 1) throw std::invalid_argument("output patch size must be >= 1");
  if (n_signals == 0 || n_measures == 0) {
    throw std::invalid_argument("patch geometry needs at least one signal and one measure");
  }
  if (mode == PatchMode::QDL) {
    if (out_size % 2 == 0 || out_size > in_size) {
      throw std::invalid_argument("q-DL output patch must be odd and no larger than the input");
    }
    if (gamma != 1) throw std::invalid_argument("q-DL geometry has gamma 1");
  } else {
    if (gamma < 1) throw std::invalid_argument("upsampling factor must be >= 1");
    if (out_size != gamma) {
      throw std::invalid_argument("SR output patch size must equal the upsampling factor");
    }
  }
}

PatchGeometry PatchGeometry::qdl(std::size_t n_signals, std::size_t n_measures, int in_size,
                                 int out_size) {
  PatchGeometry g{PatchMode::QDL, in_size, out_size, 1, n_signals, n_measures};
  g.validate();
  return g;
}

PatchGeometry PatchGeometry::sr(std::size_t n_signals, std::size_t n_measures, int gamma,
                                int in_size, int out_size) {
  PatchGeometry g{PatchMode::SR, in_size, out_size, gamma, n_signals, n_measures};
  g.validate();
  return g;
}

SampleSet::SampleSet(PatchGeometry geometry) : geometry_(geometry) { geometry_.validate(); }

void SampleSet::reserve(std::size_t n) {
  inputs_.reserve(n * geometry_.input_length());
  targets_.reserve(n * geometry_.target_length());
  centers_.reserve(n);
}

std::pair<std::span<double>, std::span<double>> SampleSet::emplace(const Index3& center) {
  const std::size_t in_len = geometry_.input_length();
  const std::size_t out_len = geometry_.target_length();
  inputs_.resize(inputs_.size() + in_len);
  targets_.resize(targets_.size() + out_len);
  centers_.push_back(center);
  return {std::span<double>(inputs_).last(in_len), std::span<double>(targets_).last(out_len)};
}

void SampleSet::push_back(const PatchSample& sample) {
  if (sample.input.size() != geometry_.input_length() ||
      sample.target.size() != geometry_.target_length()) {
    throw DataError("sample lengths do not match the set geometry");
  }
  auto [in, out] = emplace(sample.center);
  std::copy(sample.input.begin(), sample.input.end(), in.begin());
  std::copy(sample.target.begin(), sample.target.end(), out.begin());
}

void SampleSet::append(const SampleSet& other) {
  if (!(other.geometry_ == geometry_)) throw DataError("cannot merge sample sets of different geometry");
  inputs_.insert(inputs_.end(), other.inputs_.begin(), other.inputs_.end());
  targets_.insert(targets_.end(), other.targets_.begin(), other.targets_.end());
  centers_.insert(centers_.end(), other.centers_.begin(), other.centers_.end());
}

std::span<const double> SampleSet::input(std::size_t i) const {
  const std::size_t n = geometry_.input_length();
  return std::span<const double>(inputs_).subspan(i * n, n);
}

std::span<const double> SampleSet::target(std::size_t i) const {
  const std::size_t n = geometry_.target_length();
  return std::span<const double>(targets_).subspan(i * n, n);
}

PatchSample SampleSet::sample(std::size_t i) const {
  auto in = input(i);
  auto out = target(i);
  return {{in.begin(), in.end()}, {out.begin(), out.end()}, centers_[i]};
}

std::vector<Index3> eligible_centers(const Volume& mask, int in_size, std::size_t stride) {
  require_mask(mask);
  if (in_size < 1 || in_size % 2 == 0) throw std::invalid_argument("input patch size must be odd");
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  const auto half = static_cast<std::size_t>(in_size / 2);
  const Index3& d = mask.dims();
  std::vector<Index3> out;
  for (int a = 0; a < 3; ++a)
    if (d[a] < 2 * half + 1) return out;
  for (std::size_t z = half; z + half < d[2]; z += stride)
    for (std::size_t y = half; y + half < d[1]; y += stride)
      for (std::size_t x = half; x + half < d[0]; x += stride)
        if (mask.at(x, y, z) != 0.0) out.push_back({x, y, z});
  return out;
}

void gather_input(const Volume& signals, const Index3& center, int in_size, std::span<double> out) {
  const auto half = static_cast<std::size_t>(in_size / 2);
  const std::size_t n_sig = signals.volumes();
  const std::size_t stride = signals.voxel_count();
  const auto data = signals.data();
  std::size_t k = 0;
  for (std::size_t dz = 0; dz < static_cast<std::size_t>(in_size); ++dz)
    for (std::size_t dy = 0; dy < static_cast<std::size_t>(in_size); ++dy)
      for (std::size_t dx = 0; dx < static_cast<std::size_t>(in_size); ++dx) {
        const std::size_t voxel = signals.voxel_index(center[0] + dx - half, center[1] + dy - half,
                                                      center[2] + dz - half);
        for (std::size_t g = 0; g < n_sig; ++g) out[k++] = data[voxel + stride * g];
      }
}

SampleSet extract_qdl(const DwiVolume& signals, std::span<const Volume> measures,
                      const Volume& mask, int in_size, int out_size) {
  const Index3& dims = signals.image.dims();
  check_measures(measures, dims, "signal");
  if (!signals.image.same_grid(mask)) throw DataError("mask dimensions do not match the signals");

  const PatchGeometry geom = PatchGeometry::qdl(signals.image.volumes(), measures.size(), in_size,
                                                out_size);
  const auto centers = eligible_centers(mask, in_size);
  const auto half_out = static_cast<std::size_t>(out_size / 2);

  SampleSet set(geom);
  set.reserve(centers.size());
  for (const Index3& c : centers) {
    auto [in, out] = set.emplace(c);
    gather_input(signals.image, c, in_size, in);
    std::size_t k = 0;
    for (std::size_t dz = 0; dz < static_cast<std::size_t>(out_size); ++dz)
      for (std::size_t dy = 0; dy < static_cast<std::size_t>(out_size); ++dy)
        for (std::size_t dx = 0; dx < static_cast<std::size_t>(out_size); ++dx)
          for (const Volume& m : measures)
            out[k++] = m.at(c[0] + dx - half_out, c[1] + dy - half_out, c[2] + dz - half_out);
  }
  return set;
}

SampleSet extract_sr(const DwiVolume& lr_signals, std::span<const Volume> hr_measures,
                     const Volume& lr_mask, int gamma, int in_size, int out_size) {
  const PatchGeometry geom = PatchGeometry::sr(lr_signals.image.volumes(), hr_measures.size(),
                                               gamma, in_size, out_size);
  const Index3& lr = lr_signals.image.dims();
  if (!lr_signals.image.same_grid(lr_mask)) {
    throw DataError("low-resolution mask dimensions do not match the signals");
  }
  if (hr_measures.empty()) throw DataError("at least one measure map is required");
  const Index3& hr = hr_measures.front().dims();
  const auto g = static_cast<std::size_t>(gamma);
  for (int a = 0; a < 3; ++a) {
    if (hr[a] / g != lr[a]) {
      throw DataError("high-resolution dimensions are not " + std::to_string(gamma) +
                      " x the low-resolution dimensions");
    }
  }
  check_measures(hr_measures, hr, "high-resolution");

  const auto centers = eligible_centers(lr_mask, in_size);
  SampleSet set(geom);
  set.reserve(centers.size());
  for (const Index3& c : centers) {
    auto [in, out] = set.emplace(c);
    gather_input(lr_signals.image, c, in_size, in);
    std::size_t k = 0;
    for (std::size_t dz = 0; dz < g; ++dz)
      for (std::size_t dy = 0; dy < g; ++dy)
        for (std::size_t dx = 0; dx < g; ++dx)
          for (const Volume& m : hr_measures)
            out[k++] = m.at(g * c[0] + dx, g * c[1] + dy, g * c[2] + dz);
  }
  return set;
}

namespace {

Index3 block_origin(const Index3& center, const PatchGeometry& geometry, const Index3& out_dims) {
  const auto out_size = static_cast<std::size_t>(geometry.out_size);
  Index3 origin{};
  for (int a = 0; a < 3; ++a) {
    if (geometry.mode == PatchMode::SR) {
      origin[a] = center[a] * static_cast<std::size_t>(geometry.gamma);
    } else {
      const auto half = static_cast<std::size_t>(geometry.out_size / 2);
      if (center[a] < half) throw DataError("prediction centre out of bounds");
      origin[a] = center[a] - half;
    }
    if (origin[a] + out_size > out_dims[a]) throw DataError("prediction centre out of bounds");
  }
  return origin;
}

}  // namespace

std::vector<Volume> assemble(std::span<const PatchPrediction> predictions,
                             const PatchGeometry& geometry, const Index3& out_dims) {
  geometry.validate();
  const VolumeHeader h = VolumeHeader::make(out_dims);
  std::vector<Volume> maps(geometry.n_measures, Volume(h));
  Volume counts(h);

  const auto out_size = static_cast<std::size_t>(geometry.out_size);
  for (const PatchPrediction& p : predictions) {
    if (p.values.size() != geometry.target_length()) {
      throw DataError("prediction length does not match the patch geometry");
    }
    const Index3 origin = block_origin(p.center, geometry, out_dims);
    std::size_t k = 0;
    for (std::size_t dz = 0; dz < out_size; ++dz)
      for (std::size_t dy = 0; dy < out_size; ++dy)
        for (std::size_t dx = 0; dx < out_size; ++dx) {
          const Index3 v{origin[0] + dx, origin[1] + dy, origin[2] + dz};
          for (auto& map : maps) map.at(v) += p.values[k++];
          counts.at(v) += 1.0;
        }
  }
  for (std::size_t i = 0; i < counts.voxel_count(); ++i) {
    const double n = counts.data()[i];
    if (n > 1.0)
      for (auto& map : maps) map.data()[i] /= n;
  }
  return maps;
}

Volume coverage_mask(std::span<const Index3> centers, const PatchGeometry& geometry,
                     const Index3& out_dims) {
  geometry.validate();
  Volume out(VolumeHeader::make(out_dims, 1, {1.0, 1.0, 1.0}, DataType::UInt8));
  const auto out_size = static_cast<std::size_t>(geometry.out_size);
  for (const Index3& c : centers) {
    const Index3 origin = block_origin(c, geometry, out_dims);
    for (std::size_t dz = 0; dz < out_size; ++dz)
      for (std::size_t dy = 0; dy < out_size; ++dy)
        for (std::size_t dx = 0; dx < out_size; ++dx)
          out.at(origin[0] + dx, origin[1] + dy, origin[2] + dz) = 1.0;
  }
  return out;
}

void save_samples(const std::filesystem::path& path, const SampleSet& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const PatchGeometry& g = samples.geometry();
  out.write(kSampleMagic, sizeof kSampleMagic);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.mode));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.in_size));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.out_size));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.gamma));
  detail::write_le<std::uint64_t>(out, g.n_signals);
  detail::write_le<std::uint64_t>(out, g.n_measures);
  detail::write_le<std::uint64_t>(out, samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t c : samples.center(i)) detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c));
  for (double v : samples.inputs()) detail::write_le<float>(out, static_cast<float>(v));
  for (double v : samples.targets()) detail::write_le<float>(out, static_cast<float>(v));
  if (!out) throw DataError("failed writing " + path.string());
}

SampleSet load_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kSampleMagic, sizeof magic) != 0) {
    throw DataError(path.string() + ": not a sample file");
  }
  const char* what = "sample file";
  PatchGeometry g;
  const auto mode = detail::read_le<std::uint32_t>(in, what);
  if (mode > 1) throw DataError(path.string() + ": unknown patch mode");
  g.mode = static_cast<PatchMode>(mode);
  g.in_size = static_cast<int>(detail::read_le<std::uint32_t>(in, what));
  g.out_size = static_cast<int>(detail::read_le<std::uint32_t>(in, what));
  g.gamma = static_cast<int>(detail::read_le<std::uint32_t>(in, what));
  g.n_signals = detail::read_le<std::uint64_t>(in, what);
  g.n_measures = detail::read_le<std::uint64_t>(in, what);
  const auto count = detail::read_le<std::uint64_t>(in, what);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }

  SampleSet set(g);
  std::vector<Index3> centers(count);
  for (auto& c : centers)
    for (auto& x : c) x = detail::read_le<std::uint32_t>(in, what);
  std::vector<double> inputs(count * g.input_length());
  std::vector<double> targets(count * g.target_length());
  for (double& v : inputs) v = detail::read_le<float>(in, what);
  for (double& v : targets) v = detail::read_le<float>(in, what);

  set.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto [a, b] = set.emplace(centers[i]);
    std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(i * g.input_length()), a.size(), a.begin());
    std::copy_n(targets.begin() + static_cast<std::ptrdiff_t>(i * g.target_length()), b.size(), b.begin());
  }
  return set;
}

}  // namespace qxfer
