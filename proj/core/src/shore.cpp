#include "qxfer/shore.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "qxfer/error.hpp"
#include "qxfer/special.hpp"

namespace qxfer {
namespace {

// Cholesky factors with a reciprocal condition below this are treated as
// singular: the solution would carry no correct digits.
constexpr double kMinRcond = 1e3 * std::numeric_limits<double>::epsilon();

void check_order(int radial_order) {
  if (radial_order < 0 || radial_order % 2 != 0) {
    throw std::invalid_argument("SHORE radial order must be even and >= 0 (got " +
                                std::to_string(radial_order) + ")");
  }
}

}  // namespace

void ShoreBasisSpec::validate() const {
  check_order(radial_order);
  if (!(zeta > 0.0)) throw std::invalid_argument("SHORE zeta must be > 0");
  if (!(lambda_l >= 0.0) || !(lambda_n >= 0.0)) {
    throw std::invalid_argument("SHORE regularization weights must be >= 0");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("diffusion time tau must be > 0");
}

std::vector<ShoreIndex> index_set(int radial_order) {
  check_order(radial_order);
  std::vector<ShoreIndex> out;
  out.reserve(coefficient_count(radial_order));
  for (int l = 0; l <= radial_order; l += 2)
    for (int n = l; n <= (radial_order + l) / 2; ++n)
      for (int m = -l; m <= l; ++m) out.push_back({n, l, m});
  return out;
}

std::size_t coefficient_count(int radial_order) {
  check_order(radial_order);
  const std::size_t f = static_cast<std::size_t>(radial_order / 2);
  return (f + 1) * (f + 2) * (4 * f + 3) / 6;
}

double shore_kappa(double zeta, int n, int l) {
  const double log_ratio = std::lgamma(n - l + 1.0) - std::lgamma(n + 1.5);
  return std::sqrt(2.0 * std::exp(log_ratio) / std::pow(zeta, 1.5));
}

double shore_basis(const ShoreIndex& index, double zeta, double q, const Eigen::Vector3d& u) {
  const double x = q * q / zeta;
  // pow(0, 0) == 1 keeps the isotropic columns alive at q = 0.
  const double radial = shore_kappa(zeta, index.n, index.l) * std::pow(x, 0.5 * index.l) *
                        std::exp(-0.5 * x) * laguerre(index.n - index.l, index.l + 0.5, x);
  return radial * real_sph_harm(index.l, index.m, u);
}

DesignMatrix design_matrix(const GradientScheme& scheme, const ShoreBasisSpec& spec) {
  spec.validate();
  DesignMatrix dm;
  dm.index_set = index_set(spec.radial_order);
  dm.scheme_fingerprint = scheme.fingerprint();

  // tau comes from the basis spec, not the scheme.
  const GradientScheme mapped(scheme.entries(), scheme.b0_threshold(), spec.tau);
  const auto q = q_coordinates(mapped);

  const auto rows = static_cast<Eigen::Index>(q.size());
  const auto cols = static_cast<Eigen::Index>(dm.index_set.size());
  dm.values.resize(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const ShoreIndex& idx = dm.index_set[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < rows; ++i) {
      const QPoint& p = q[static_cast<std::size_t>(i)];
      dm.values(i, j) = shore_basis(idx, spec.zeta, p.magnitude, p.direction);
    }
  }
  return dm;
}

RegularizerSpec RegularizerSpec::from_index_set(const std::vector<ShoreIndex>& indices) {
  RegularizerSpec reg;
  const auto k = static_cast<Eigen::Index>(indices.size());
  reg.l_diag.resize(k);
  reg.n_diag.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& idx = indices[static_cast<std::size_t>(j)];
    reg.l_diag[j] = static_cast<double>(idx.l) * (idx.l + 1);
    reg.n_diag[j] = static_cast<double>(idx.n) * (idx.n + 1);
  }
  return reg;
}

ShoreFitter::ShoreFitter(const DesignMatrix& design, const RegularizerSpec& reg,
                         double lambda_l, double lambda_n) {
  const Eigen::Index k = design.cols();
  if (reg.l_diag.size() != k || reg.n_diag.size() != k) {
    throw DataError("regularizer length does not match the dictionary column count");
  }
  if (!(lambda_l >= 0.0) || !(lambda_n >= 0.0)) {
    throw std::invalid_argument("regularization weights must be >= 0");
  }

  Eigen::MatrixXd system = design.values.transpose() * design.values;
  system.diagonal() += lambda_l * reg.l_diag.cwiseAbs2() + lambda_n * reg.n_diag.cwiseAbs2();

  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("SHORE system matrix is not positive definite");
  }
  rcond_ = llt.rcond();
  if (!(rcond_ > kMinRcond)) {
    throw NumericalError("SHORE system matrix is singular to working precision (rcond " +
                         std::to_string(rcond_) + ")");
  }
  solve_ = llt.solve(design.values.transpose());
}

CoefficientVector ShoreFitter::fit(std::span<const double> signal) const {
  CoefficientVector c(solve_.rows());
  fit(signal, {c.data(), static_cast<std::size_t>(c.size())});
  return c;
}

void ShoreFitter::fit(std::span<const double> signal, std::span<double> coefficients) const {
  if (signal.size() != signal_length()) {
    throw DataError("signal length " + std::to_string(signal.size()) +
                    " does not match the dictionary row count " + std::to_string(signal_length()));
  }
  if (coefficients.size() != coefficient_length()) {
    throw DataError("coefficient buffer has the wrong length");
  }
  Eigen::Map<const Eigen::VectorXd> y(signal.data(), solve_.cols());
  Eigen::Map<Eigen::VectorXd> c(coefficients.data(), solve_.rows());
  c.noalias() = solve_ * y;
}

CoefficientVector fit_coefficients(const DesignMatrix& design, const RegularizerSpec& reg,
                                   double lambda_l, double lambda_n,
                                   std::span<const double> signal) {
  return ShoreFitter(design, reg, lambda_l, lambda_n).fit(signal);
}

Eigen::VectorXd interpolate(const CoefficientVector& coefficients, const DesignMatrix& target) {
  if (coefficients.size() != target.cols()) {
    throw DataError("coefficient length " + std::to_string(coefficients.size()) +
                    " does not match the target dictionary (" + std::to_string(target.cols()) +
                    " columns)");
  }
  return target.values * coefficients;
}

ShoreInterpolator::ShoreInterpolator(const GradientScheme& source, const GradientScheme& target,
                                     const ShoreBasisSpec& spec) {
  const DesignMatrix src = design_matrix(source, spec);
  const DesignMatrix dst = design_matrix(target, spec);
  const ShoreFitter fitter(src, RegularizerSpec::from_index_set(src.index_set), spec.lambda_l,
                           spec.lambda_n);
  operator_ = dst.values * fitter.solve_operator();
}

void ShoreInterpolator::apply(std::span<const double> source_signal,
                              std::span<double> target_signal) const {
  if (source_signal.size() != source_length() || target_signal.size() != target_length()) {
    throw DataError("interpolation buffers do not match the source/target schemes");
  }
  Eigen::Map<const Eigen::VectorXd> y(source_signal.data(), operator_.cols());
  Eigen::Map<Eigen::VectorXd> out(target_signal.data(), operator_.rows());
  out.noalias() = operator_ * y;
}

Eigen::VectorXd ShoreInterpolator::apply(std::span<const double> source_signal) const {
  Eigen::VectorXd out(operator_.rows());
  apply(source_signal, {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

void write_index_sidecar(const std::filesystem::path& path, const std::vector<ShoreIndex>& indices,
                         const ShoreBasisSpec& spec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# SHORE coefficient order, one 'n l m' triple per volume\n";
  out << "# radial_order " << spec.radial_order << " angular_order " << spec.radial_order
      << " (coupled)\n";
  out << "# zeta " << spec.zeta << " lambda_l " << spec.lambda_l << " lambda_n " << spec.lambda_n
      << " tau " << spec.tau << '\n';
  for (const auto& idx : indices) out << idx.n << ' ' << idx.l << ' ' << idx.m << '\n';
}

}  // namespace qxfer
