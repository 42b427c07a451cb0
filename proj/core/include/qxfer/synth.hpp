#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qxfer/scheme.hpp"
#include "qxfer/volume.hpp"

namespace qxfer {

/// Compartments with fractional anisotropy above this count as anisotropic.
inline constexpr double kAnisotropyThreshold = 0.2;

struct Compartment {
  double fraction = 1.0;
  Eigen::Matrix3d tensor = Eigen::Matrix3d::Zero();  // mm^2/s
};

/// Gaussian multi-compartment voxel.
struct VoxelModel {
  std::vector<Compartment> compartments;
  double s0 = 1.0;

  /// Throws DataError unless fractions lie in [0, 1] and sum to 1 (1e-9),
  /// tensors are symmetric positive semidefinite and s0 > 0.
  void validate() const;
};

Eigen::Matrix3d isotropic_tensor(double diffusivity);
/// Axially symmetric tensor with eigenvalue `parallel` along `direction`.
Eigen::Matrix3d cylinder_tensor(const Eigen::Vector3d& direction, double parallel, double perpendicular);
double fractional_anisotropy(const Eigen::Matrix3d& tensor);

/// S(b, g) = s0 * sum_i f_i exp(-b g^T D_i g).
std::vector<double> signal(const VoxelModel& model, const GradientScheme& scheme);

struct Measures {
  double f_aniso = 0.0;
  double f_iso = 1.0;
  double fa_of_aniso = 0.0;
};

inline constexpr std::array<const char*, 3> kMeasureNames{"f_aniso", "f_iso", "fa_aniso"};

Measures ground_truth_measures(const VoxelModel& model);

/// Magnitude (Rician) noise: sqrt((S + n1)^2 + n2^2) with n ~ N(0, sigma * s0).
/// Throws std::invalid_argument for sigma < 0.
std::vector<double> add_rician_noise(std::span<const double> signals, double sigma,
                                     std::uint64_t seed, double s0 = 1.0);

/// In-place Rician noise on every masked voxel of a 4D image, one seeded
/// stream per voxel (independent of the thread count).
void add_rician_noise(Volume& image, const Volume& mask, double sigma, double s0,
                      std::uint64_t seed, std::size_t threads = 0);

/// Ellipsoid in voxel coordinates carrying one voxel model.
struct PhantomRegion {
  std::string name;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d radii = Eigen::Vector3d::Ones();
  VoxelModel model;

  bool contains(const Eigen::Vector3d& p) const;
};

/// Regions are painted in order, later ones on top. Voxels outside every
/// region are background (zero signal, outside the mask).
struct PhantomConfig {
  Index3 dims{16, 16, 16};
  std::array<double, 3> voxel_size{1.25, 1.25, 1.25};
  std::vector<PhantomRegion> regions;
  double noise_sigma = 0.0;  // relative to s0
  std::uint64_t seed = 0;

  void validate() const;
};

struct Phantom {
  DwiVolume source;
  DwiVolume target;
  std::vector<Volume> measures;  // f_aniso, f_iso, fa_aniso
  Volume mask;
};

/// Paired source/target acquisitions of one phantom sharing ground truth.
/// Noise streams are drawn per voxel from (seed, voxel, acquisition), so the
/// output does not depend on the thread count.
Phantom generate(const PhantomConfig& config, const GradientScheme& source_scheme,
                 const GradientScheme& target_scheme, std::size_t threads = 0);

/// Brain-like random subject: an ellipsoidal support of mixed tissue with
/// fibre bundles (some crossing) and fluid-filled pockets.
PhantomConfig random_subject_config(const Index3& dims, std::uint64_t seed, double noise_sigma);

/// n_b0 unweighted entries followed by `per_shell` directions on each shell.
/// Directions are a Fibonacci half-sphere lattice rotated differently per
/// shell so that shells interleave.
GradientScheme shell_scheme(const std::vector<double>& shells, std::size_t per_shell,
                            std::size_t n_b0);

/// Dense multi-shell source acquisition: 20 directions on each of
/// b = 1000, 2000, 3000 plus 6 b0.
GradientScheme default_source_scheme();
/// Sparse target acquisition: 18 directions on each of b = 1000, 3000 plus 4 b0.
GradientScheme default_target_scheme();

/// Writes source/target NIfTI + FSL gradients, measure maps, the mask and a
/// manifest into `dir`.
void write_phantom(const std::filesystem::path& dir, const Phantom& phantom,
                   const PhantomConfig& config);

}  // namespace qxfer
