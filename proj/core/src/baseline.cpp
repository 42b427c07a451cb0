#include "qxfer/baseline.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "qxfer/error.hpp"
#include "qxfer/parallel.hpp"

namespace qxfer {
namespace {

constexpr double kMinSignal = 1e-6;

}  // namespace

DictionaryFitter::DictionaryFitter(const GradientScheme& scheme, DictionaryConfig config)
    : config_(std::move(config)) {
  if (config_.perpendicular.empty() && config_.isotropic.empty()) {
    throw std::invalid_argument("dictionary has no atoms");
  }
  if (config_.perpendicular.size() + config_.isotropic.size() > 16) {
    throw std::invalid_argument("dictionary too large for exhaustive active-set search");
  }
  const std::size_t m = scheme.size();
  if (m < 6) throw DataError("tensor fit needs at least 6 diffusion-weighted measurements");

  Eigen::MatrixXd design(static_cast<Eigen::Index>(m), 6);
  for (std::size_t i = 0; i < m; ++i) {
    if (scheme.is_b0(i)) throw DataError("dictionary fit expects diffusion-weighted entries only");
    const auto& e = scheme[i];
    const Eigen::Vector3d g = e.bvec.normalized();
    bvals_.push_back(e.bval);
    dirs_.push_back(g);
    const auto r = static_cast<Eigen::Index>(i);
    design.row(r) << g.x() * g.x(), g.y() * g.y(), g.z() * g.z(), 2 * g.x() * g.y(),
        2 * g.x() * g.z(), 2 * g.y() * g.z();
    design.row(r) *= e.bval;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 6) throw DataError("gradient directions do not determine a tensor");
  tensor_solve_ = qr.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m),
                                                     static_cast<Eigen::Index>(m)));
}

Eigen::Vector3d DictionaryFitter::principal_direction(std::span<const double> s) const {
  if (s.size() != bvals_.size()) throw DataError("signal length does not match the scheme");
  Eigen::VectorXd y(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) y[static_cast<Eigen::Index>(i)] = -std::log(std::max(s[i], kMinSignal));
  const Eigen::Matrix<double, 6, 1> d = tensor_solve_ * y;
  Eigen::Matrix3d t;
  t << d[0], d[3], d[4], d[3], d[1], d[5], d[4], d[5], d[2];
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t);
  return es.eigenvectors().col(2);
}

Measures DictionaryFitter::fit(std::span<const double> s) const {
  const Eigen::Vector3d u = principal_direction(s);
  const std::size_t n_aniso = config_.perpendicular.size();
  const std::size_t k = n_aniso + config_.isotropic.size();
  const auto m = static_cast<Eigen::Index>(s.size());

  Eigen::MatrixXd atoms(m, static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double b = bvals_[static_cast<std::size_t>(i)];
    const double c2 = std::pow(u.dot(dirs_[static_cast<std::size_t>(i)]), 2);
    for (std::size_t a = 0; a < n_aniso; ++a) {
      const double adc = config_.perpendicular[a] + (config_.parallel - config_.perpendicular[a]) * c2;
      atoms(i, static_cast<Eigen::Index>(a)) = std::exp(-b * adc);
    }
    for (std::size_t a = 0; a < config_.isotropic.size(); ++a) {
      atoms(i, static_cast<Eigen::Index>(n_aniso + a)) = std::exp(-b * config_.isotropic[a]);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> y(s.data(), m);
  const Eigen::MatrixXd gram = atoms.transpose() * atoms;
  const Eigen::VectorXd h = atoms.transpose() * y;

  // Nonnegative least squares: the optimum is the unconstrained solution on
  // some support, so try every support and keep the best feasible one.
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (std::uint32_t set = 1; set < (1u << k); ++set) {
    std::vector<Eigen::Index> idx;
    for (std::size_t a = 0; a < k; ++a)
      if (set & (1u << a)) idx.push_back(static_cast<Eigen::Index>(a));
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd g(n, n);
    Eigen::VectorXd hh(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      hh[r] = h[idx[static_cast<std::size_t>(r)]];
      for (Eigen::Index c = 0; c < n; ++c) g(r, c) = gram(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd x = ldlt.solve(hh);
    if (!x.allFinite() || (x.array() < 0.0).any()) continue;
    // ||y - Ax||^2 up to the constant y'y.
    const double cost = x.dot(g * x) - 2.0 * x.dot(hh);
    if (cost < best) {
      best = cost;
      weights.setZero();
      for (Eigen::Index r = 0; r < n; ++r) weights[idx[static_cast<std::size_t>(r)]] = x[r];
    }
  }

  Measures out;
  const double total = weights.sum();
  if (!(total > 0.0)) return out;
  const double aniso = weights.head(static_cast<Eigen::Index>(n_aniso)).sum();
  out.f_aniso = aniso / total;
  out.f_iso = 1.0 - out.f_aniso;
  if (aniso > 0.0) {
    Eigen::Matrix3d t = Eigen::Matrix3d::Zero();
    for (std::size_t a = 0; a < n_aniso; ++a) {
      t += weights[static_cast<Eigen::Index>(a)] *
           cylinder_tensor(u, config_.parallel, config_.perpendicular[a]);
    }
    out.fa_of_aniso = fractional_anisotropy(t / aniso);
  }
  return out;
}

std::vector<Volume> baseline_volume(const DwiVolume& normalized, const Volume& mask,
                                    std::size_t threads, DictionaryConfig config) {
  normalized.validate();
  require_mask(mask);
  if (!normalized.image.same_grid(mask)) throw DataError("mask dimensions do not match the input");
  const DictionaryFitter fitter(normalized.scheme, std::move(config));

  VolumeHeader h = normalized.image.header();
  h.volumes = 1;
  h.datatype = DataType::Float32;
  std::vector<Volume> maps;
  for (const char* name : kMeasureNames) {
    h.description = name;
    maps.emplace_back(h);
  }

  const std::size_t n_vox = mask.voxel_count();
  parallel_for(n_vox, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf(normalized.scheme.size());
    for (std::size_t v = begin; v < end; ++v) {
      if (mask.data()[v] == 0.0) continue;
      normalized.image.read_signal(v, buf);
      const Measures m = fitter.fit(buf);
      maps[0].data()[v] = m.f_aniso;
      maps[1].data()[v] = m.f_iso;
      maps[2].data()[v] = m.fa_of_aniso;
    }
  });
  return maps;
}

}  // namespace qxfer
