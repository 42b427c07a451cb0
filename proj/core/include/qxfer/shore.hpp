#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "qxfer/scheme.hpp"

namespace qxfer {

/// (radial order n, angular order l, angular degree m) of one SHORE function.
struct ShoreIndex {
  int n = 0;
  int l = 0;
  int m = 0;
  friend auto operator<=>(const ShoreIndex&, const ShoreIndex&) = default;
};

/// Basis size and fit regularization. The angular order is tied to the
/// radial order, so there is no separate maximum l.
struct ShoreBasisSpec {
  int radial_order = 6;  // even
  double zeta = 700.0;
  double lambda_l = 1e-8;
  double lambda_n = 1e-8;
  double tau = kDefaultTau;

  /// Throws std::invalid_argument on odd/negative order, zeta <= 0 or negative weights.
  void validate() const;
};

/// Admissible index triples: even l ascending, n from l to (N + l) / 2,
/// m from -l to l. Throws std::invalid_argument for odd or negative N.
std::vector<ShoreIndex> index_set(int radial_order);

/// (F + 1)(F + 2)(4F + 3) / 6 with F = N / 2.
std::size_t coefficient_count(int radial_order);

/// Normalization sqrt(2 (n - l)! / (zeta^{3/2} Gamma(n + 3/2))), via log-Gamma.
double shore_kappa(double zeta, int n, int l);

/// One SHORE function at q-space magnitude q and unit direction u.
double shore_basis(const ShoreIndex& index, double zeta, double q, const Eigen::Vector3d& u);

/// The dictionary of a scheme: row i is the i-th gradient, column j the j-th index.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<ShoreIndex> index_set;
  std::uint64_t scheme_fingerprint = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

DesignMatrix design_matrix(const GradientScheme& scheme, const ShoreBasisSpec& spec);

/// Diagonals of the angular (l(l+1)) and radial (n(n+1)) penalty operators.
struct RegularizerSpec {
  Eigen::VectorXd l_diag;
  Eigen::VectorXd n_diag;

  static RegularizerSpec from_index_set(const std::vector<ShoreIndex>& indices);
};

using CoefficientVector = Eigen::VectorXd;

/// Closed-form regularized least-squares fit
///   c = (Phi^T Phi + lambda_l L^T L + lambda_n N^T N)^{-1} Phi^T y.
///
/// The system is factored once (Cholesky) on construction; the resulting
/// K x M solve operator is shared read-only, so fit() may be called from
/// any number of threads.
class ShoreFitter {
 public:
  /// Throws NumericalError when the system matrix is not positive definite
  /// to working precision.
  ShoreFitter(const DesignMatrix& design, const RegularizerSpec& reg, double lambda_l,
              double lambda_n);

  std::size_t signal_length() const { return static_cast<std::size_t>(solve_.cols()); }
  std::size_t coefficient_length() const { return static_cast<std::size_t>(solve_.rows()); }

  CoefficientVector fit(std::span<const double> signal) const;
  void fit(std::span<const double> signal, std::span<double> coefficients) const;

  /// (Phi^T Phi + Lambda)^{-1} Phi^T.
  const Eigen::MatrixXd& solve_operator() const { return solve_; }
  /// Reciprocal condition estimate of the factored system.
  double rcond() const { return rcond_; }

 private:
  Eigen::MatrixXd solve_;
  double rcond_ = 0.0;
};

CoefficientVector fit_coefficients(const DesignMatrix& design, const RegularizerSpec& reg,
                                   double lambda_l, double lambda_n,
                                   std::span<const double> signal);

/// Phi_t c. Throws DataError when the lengths disagree.
Eigen::VectorXd interpolate(const CoefficientVector& coefficients, const DesignMatrix& target);

/// Fit on a source scheme and evaluate on a target scheme in one product.
/// The M_t x M_s operator Phi_t (Phi_s^T Phi_s + Lambda)^{-1} Phi_s^T is
/// precomputed.
class ShoreInterpolator {
 public:
  ShoreInterpolator(const GradientScheme& source, const GradientScheme& target,
                    const ShoreBasisSpec& spec);

  std::size_t source_length() const { return static_cast<std::size_t>(operator_.cols()); }
  std::size_t target_length() const { return static_cast<std::size_t>(operator_.rows()); }

  void apply(std::span<const double> source_signal, std::span<double> target_signal) const;
  Eigen::VectorXd apply(std::span<const double> source_signal) const;

  const Eigen::MatrixXd& matrix() const { return operator_; }

 private:
  Eigen::MatrixXd operator_;
};

/// Writes "n l m" per line in column order.
void write_index_sidecar(const std::filesystem::path& path, const std::vector<ShoreIndex>& indices,
                         const ShoreBasisSpec& spec);

}  // namespace qxfer
