#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qxfer/scheme.hpp"
#include "qxfer/synth.hpp"
#include "qxfer/volume.hpp"

namespace qxfer {

/// Atoms of the per-voxel reference fit. Anisotropic atoms are cylinders
/// along the voxel's principal diffusion direction.
struct DictionaryConfig {
  double parallel = 1.7e-3;
  std::vector<double> perpendicular{0.1e-3, 0.3e-3, 0.5e-3, 0.7e-3};
  std::vector<double> isotropic{0.9e-3, 3.0e-3};
};

/// Per-voxel linear least-squares estimate of the compartment measures from
/// b0-normalized signals alone (no learning, no spatial context).
///
/// A log-linear tensor fit gives the principal direction; the signal is then
/// decomposed on the dictionary with nonnegative weights (exact solution by
/// enumerating active sets) and the weights are normalized to fractions.
class DictionaryFitter {
 public:
  /// `scheme` must hold diffusion-weighted entries only.
  explicit DictionaryFitter(const GradientScheme& scheme, DictionaryConfig config = {});

  Measures fit(std::span<const double> normalized_signal) const;

  /// Principal eigenvector of the log-linear tensor fit.
  Eigen::Vector3d principal_direction(std::span<const double> normalized_signal) const;

  std::size_t signal_length() const { return bvals_.size(); }

 private:
  DictionaryConfig config_;
  std::vector<double> bvals_;
  std::vector<Eigen::Vector3d> dirs_;
  Eigen::MatrixXd tensor_solve_;  // 6 x M
};

/// Fits every masked voxel; returns f_aniso, f_iso and fa_aniso maps.
std::vector<Volume> baseline_volume(const DwiVolume& normalized, const Volume& mask,
                                    std::size_t threads = 0, DictionaryConfig config = {});

}  // namespace qxfer
