#include "qxfer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "qxfer/error.hpp"
#include "qxfer/nifti.hpp"
#include "qxfer/parallel.hpp"

namespace qxfer {
namespace {

constexpr double kFractionTolerance = 1e-9;
constexpr double kPsdTolerance = 1e-12;

enum : std::uint64_t { kSaltSource = 0x5352ULL, kSaltTarget = 0x5447ULL };

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t voxel, std::uint64_t salt) {
  return splitmix(splitmix(splitmix(seed) ^ voxel) ^ salt);
}

void add_noise_inplace(std::span<double> s, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sd);
  for (double& v : s) {
    const double re = v + n(rng);
    const double im = n(rng);
    v = std::hypot(re, im);
  }
}

Eigen::Vector3d random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = {n(rng), n(rng), n(rng)};
  } while (v.norm() < 1e-6);
  return v.normalized();
}

}  // namespace

void VoxelModel::validate() const {
  if (compartments.empty()) throw DataError("voxel model has no compartments");
  if (!(s0 > 0.0) || !std::isfinite(s0)) throw DataError("voxel model s0 must be positive");
  double total = 0.0;
  for (const auto& c : compartments) {
    if (!(c.fraction >= 0.0 && c.fraction <= 1.0)) {
      throw DataError("compartment fraction outside [0, 1]");
    }
    total += c.fraction;
    if (!c.tensor.allFinite() || !c.tensor.isApprox(c.tensor.transpose(), 1e-12)) {
      throw DataError("compartment tensor is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c.tensor, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTolerance) {
      throw DataError("compartment tensor is not positive semidefinite");
    }
  }
  if (std::abs(total - 1.0) > kFractionTolerance) {
    throw DataError("compartment fractions sum to " + std::to_string(total));
  }
}

Eigen::Matrix3d isotropic_tensor(double diffusivity) {
  return diffusivity * Eigen::Matrix3d::Identity();
}

Eigen::Matrix3d cylinder_tensor(const Eigen::Vector3d& direction, double parallel,
                                double perpendicular) {
  const Eigen::Vector3d u = direction.normalized();
  return perpendicular * Eigen::Matrix3d::Identity() + (parallel - perpendicular) * u * u.transpose();
}

double fractional_anisotropy(const Eigen::Matrix3d& tensor) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(tensor, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = es.eigenvalues();
  const double denom = ev.squaredNorm();
  if (denom <= 0.0) return 0.0;
  const double mean = ev.mean();
  return std::sqrt(1.5 * (ev.array() - mean).square().sum() / denom);
}

std::vector<double> signal(const VoxelModel& model, const GradientScheme& scheme) {
  model.validate();
  std::vector<double> out(scheme.size());
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const auto& e = scheme[i];
    if (scheme.is_b0(i) && e.bvec.isZero()) {
      out[i] = model.s0;
      continue;
    }
    double s = 0.0;
    for (const auto& c : model.compartments) {
      s += c.fraction * std::exp(-e.bval * e.bvec.dot(c.tensor * e.bvec));
    }
    out[i] = model.s0 * s;
  }
  return out;
}

Measures ground_truth_measures(const VoxelModel& model) {
  Measures m;
  Eigen::Matrix3d weighted = Eigen::Matrix3d::Zero();
  m.f_aniso = 0.0;
  for (const auto& c : model.compartments) {
    if (fractional_anisotropy(c.tensor) > kAnisotropyThreshold) {
      m.f_aniso += c.fraction;
      weighted += c.fraction * c.tensor;
    }
  }
  m.f_iso = 1.0 - m.f_aniso;
  m.fa_of_aniso = m.f_aniso > 0.0 ? fractional_anisotropy(weighted / m.f_aniso) : 0.0;
  return m;
}

std::vector<double> add_rician_noise(std::span<const double> signals, double sigma,
                                     std::uint64_t seed, double s0) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  std::vector<double> out(signals.begin(), signals.end());
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  add_noise_inplace(out, sigma * s0, rng);
  return out;
}

void add_rician_noise(Volume& image, const Volume& mask, double sigma, double s0,
                      std::uint64_t seed, std::size_t threads) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (!image.same_grid(mask)) throw DataError("mask dimensions do not match the image");
  if (sigma == 0.0) return;
  parallel_for(image.voxel_count(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf(image.volumes());
    for (std::size_t v = begin; v < end; ++v) {
      if (mask.data()[v] == 0.0) continue;
      image.read_signal(v, buf);
      std::mt19937_64 rng(stream_seed(seed, v, kSaltTarget));
      add_noise_inplace(buf, sigma * s0, rng);
      image.write_signal(v, buf);
    }
  });
}

bool PhantomRegion::contains(const Eigen::Vector3d& p) const {
  return ((p - center).array() / radii.array()).square().sum() <= 1.0;
}

void PhantomConfig::validate() const {
  for (std::size_t d : dims)
    if (d == 0) throw DataError("phantom dimensions must be positive");
  for (double v : voxel_size)
    if (!(v > 0.0)) throw DataError("phantom voxel size must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  for (const auto& r : regions) {
    if (!(r.radii.array() > 0.0).all()) throw DataError("region '" + r.name + "' has a non-positive radius");
    r.model.validate();
  }
}

Phantom generate(const PhantomConfig& config, const GradientScheme& source_scheme,
                 const GradientScheme& target_scheme, std::size_t threads) {
  config.validate();
  if (source_scheme.empty() || target_scheme.empty()) {
    throw DataError("phantom generation needs non-empty gradient schemes");
  }

  // Region signals are constant, so compute them once.
  const std::size_t n_regions = config.regions.size();
  std::vector<std::vector<double>> src_signal(n_regions);
  std::vector<std::vector<double>> dst_signal(n_regions);
  std::vector<Measures> measures(n_regions);
  for (std::size_t r = 0; r < n_regions; ++r) {
    src_signal[r] = signal(config.regions[r].model, source_scheme);
    dst_signal[r] = signal(config.regions[r].model, target_scheme);
    measures[r] = ground_truth_measures(config.regions[r].model);
  }

  const Index3 dims = config.dims;
  Phantom ph;
  ph.source.scheme = source_scheme;
  ph.target.scheme = target_scheme;
  ph.source.image = Volume(VolumeHeader::make(dims, source_scheme.size(), config.voxel_size));
  ph.target.image = Volume(VolumeHeader::make(dims, target_scheme.size(), config.voxel_size));
  ph.mask = Volume(VolumeHeader::make(dims, 1, config.voxel_size, DataType::UInt8));
  for (std::size_t k = 0; k < kMeasureNames.size(); ++k) {
    ph.measures.emplace_back(VolumeHeader::make(dims, 1, config.voxel_size));
    ph.measures.back().header().description = kMeasureNames[k];
  }
  ph.source.image.header().description = "synthetic source";
  ph.target.image.header().description = "synthetic target";

  const std::size_t n_vox = ph.mask.voxel_count();
  parallel_for(n_vox, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf_s(source_scheme.size());
    std::vector<double> buf_t(target_scheme.size());
    for (std::size_t v = begin; v < end; ++v) {
      const std::size_t x = v % dims[0];
      const std::size_t y = (v / dims[0]) % dims[1];
      const std::size_t z = v / (dims[0] * dims[1]);
      const Eigen::Vector3d p(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z));
      std::ptrdiff_t region = -1;
      for (std::size_t r = n_regions; r-- > 0;) {
        if (config.regions[r].contains(p)) {
          region = static_cast<std::ptrdiff_t>(r);
          break;
        }
      }
      if (region < 0) continue;
      const auto r = static_cast<std::size_t>(region);

      ph.mask.at(x, y, z) = 1.0;
      ph.measures[0].at(x, y, z) = measures[r].f_aniso;
      ph.measures[1].at(x, y, z) = measures[r].f_iso;
      ph.measures[2].at(x, y, z) = measures[r].fa_of_aniso;

      buf_s = src_signal[r];
      buf_t = dst_signal[r];
      if (config.noise_sigma > 0.0) {
        const double sd = config.noise_sigma * config.regions[r].model.s0;
        std::mt19937_64 rng_s(stream_seed(config.seed, v, kSaltSource));
        add_noise_inplace(buf_s, sd, rng_s);
        std::mt19937_64 rng_t(stream_seed(config.seed, v, kSaltTarget));
        add_noise_inplace(buf_t, sd, rng_t);
      }
      ph.source.image.write_signal(v, buf_s);
      ph.target.image.write_signal(v, buf_t);
    }
  });
  return ph;
}

PhantomConfig random_subject_config(const Index3& dims, std::uint64_t seed, double noise_sigma) {
  PhantomConfig cfg;
  cfg.dims = dims;
  cfg.seed = seed;
  cfg.noise_sigma = noise_sigma;

  std::mt19937_64 rng(splitmix(seed ^ 0x70686e74ULL));
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  const Eigen::Vector3d extent(static_cast<double>(dims[0]), static_cast<double>(dims[1]),
                               static_cast<double>(dims[2]));
  const Eigen::Vector3d mid = 0.5 * (extent - Eigen::Vector3d::Ones());
  const Eigen::Vector3d support_radii = 0.47 * extent;
  const double scale = extent.minCoeff();

  PhantomRegion tissue;
  tissue.name = "tissue";
  tissue.center = mid;
  tissue.radii = support_radii;
  {
    const double fa = uni(0.2, 0.4);
    tissue.model.compartments = {
        {fa, cylinder_tensor(random_direction(rng), uni(1.4e-3, 1.8e-3), uni(0.4e-3, 0.6e-3))},
        {1.0 - fa, isotropic_tensor(uni(0.7e-3, 1.0e-3))}};
  }
  cfg.regions.push_back(tissue);

  auto random_center = [&] {
    Eigen::Vector3d c;
    do {
      c = {uni(-1.0, 1.0), uni(-1.0, 1.0), uni(-1.0, 1.0)};
    } while (c.squaredNorm() > 1.0);
    return Eigen::Vector3d(mid + 0.75 * c.cwiseProduct(support_radii));
  };

  const int n_bundles = 10;
  for (int i = 0; i < n_bundles; ++i) {
    PhantomRegion b;
    b.name = "bundle" + std::to_string(i);
    b.center = random_center();
    b.radii = {uni(0.1, 0.22) * scale, uni(0.1, 0.22) * scale, uni(0.1, 0.22) * scale};
    const double f_aniso = uni(0.45, 0.85);
    const double f_iso = 1.0 - f_aniso;
    const Eigen::Vector3d dir = random_direction(rng);
    const double lpar = uni(1.5e-3, 2.0e-3);
    const double lperp = uni(0.15e-3, 0.5e-3);
    if (uni(0.0, 1.0) < 0.3) {
      const double split = uni(0.35, 0.65);
      b.model.compartments = {
          {f_aniso * split, cylinder_tensor(dir, lpar, lperp)},
          {f_aniso * (1.0 - split),
           cylinder_tensor(random_direction(rng), uni(1.5e-3, 2.0e-3), uni(0.15e-3, 0.5e-3))},
          {f_iso, isotropic_tensor(uni(0.7e-3, 1.0e-3))}};
    } else {
      b.model.compartments = {{f_aniso, cylinder_tensor(dir, lpar, lperp)},
                              {f_iso, isotropic_tensor(uni(0.7e-3, 1.0e-3))}};
    }
    cfg.regions.push_back(std::move(b));
  }

  const int n_pockets = 3;
  for (int i = 0; i < n_pockets; ++i) {
    PhantomRegion c;
    c.name = "fluid" + std::to_string(i);
    c.center = random_center();
    c.radii = {uni(0.06, 0.12) * scale, uni(0.06, 0.12) * scale, uni(0.06, 0.12) * scale};
    const double f_free = uni(0.85, 1.0);
    c.model.compartments = {{f_free, isotropic_tensor(3.0e-3)},
                            {1.0 - f_free, isotropic_tensor(uni(0.7e-3, 1.0e-3))}};
    cfg.regions.push_back(std::move(c));
  }
  return cfg;
}

GradientScheme shell_scheme(const std::vector<double>& shells, std::size_t per_shell,
                            std::size_t n_b0) {
  std::vector<GradientEntry> entries(n_b0);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t s = 0; s < shells.size(); ++s) {
    const double offset = golden * static_cast<double>(s) / static_cast<double>(shells.size());
    for (std::size_t i = 0; i < per_shell; ++i) {
      const double z = (static_cast<double>(i) + 0.5) / static_cast<double>(per_shell);
      const double r = std::sqrt(1.0 - z * z);
      const double phi = golden * static_cast<double>(i) + offset;
      entries.push_back({shells[s], Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z)});
    }
  }
  return GradientScheme(std::move(entries));
}

GradientScheme default_source_scheme() { return shell_scheme({1000.0, 2000.0, 3000.0}, 20, 6); }

GradientScheme default_target_scheme() { return shell_scheme({1000.0, 3000.0}, 18, 4); }

void write_phantom(const std::filesystem::path& dir, const Phantom& phantom,
                   const PhantomConfig& config) {
  std::filesystem::create_directories(dir);
  save_volume(dir / "source.nii", phantom.source.image);
  write_fsl_gradients(phantom.source.scheme, dir / "source.bval", dir / "source.bvec");
  save_volume(dir / "target.nii", phantom.target.image);
  write_fsl_gradients(phantom.target.scheme, dir / "target.bval", dir / "target.bvec");
  for (std::size_t k = 0; k < phantom.measures.size(); ++k) {
    save_volume(dir / (std::string(kMeasureNames[k]) + ".nii"), phantom.measures[k]);
  }
  save_volume(dir / "mask.nii", phantom.mask);

  std::ofstream out(dir / "manifest.txt");
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << std::setprecision(17);
  out << "dims = " << config.dims[0] << ' ' << config.dims[1] << ' ' << config.dims[2] << '\n';
  out << "voxel_size = " << config.voxel_size[0] << ' ' << config.voxel_size[1] << ' '
      << config.voxel_size[2] << '\n';
  out << "noise_sigma = " << config.noise_sigma << '\n';
  out << "seed = " << config.seed << '\n';
  out << "source_gradients = " << phantom.source.scheme.size() << '\n';
  out << "target_gradients = " << phantom.target.scheme.size() << '\n';
  out << "regions = " << config.regions.size() << '\n';
  for (const auto& r : config.regions) {
    const Measures m = ground_truth_measures(r.model);
    out << "region." << r.name << " = center " << r.center.transpose() << " radii "
        << r.radii.transpose() << " f_aniso " << m.f_aniso << " fa " << m.fa_of_aniso << '\n';
  }
}

}  // namespace qxfer
