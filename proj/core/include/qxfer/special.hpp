#pragma once

#include <Eigen/Core>

namespace qxfer {

/// Generalized Laguerre polynomial L_k^(alpha)(x) by the three-term recurrence.
double laguerre(int k, double alpha, double x);

/// Real orthonormal spherical harmonic of degree l and order m at a unit
/// direction. m = 0 gives Y_l^0, m > 0 the sqrt(2)-scaled cosine part and
/// m < 0 the sqrt(2)-scaled sine part (the (-1)^m factor cancels the
/// Condon-Shortley phase). Throws std::invalid_argument when |m| > l.
double real_sph_harm(int l, int m, const Eigen::Vector3d& direction);

/// Orthonormal associated Legendre values p_l^m(cos theta) for 0 <= m <= l,
/// without the Condon-Shortley phase, such that p_l^m(cos theta) e^{i m phi}
/// is orthonormal on the sphere.
double normalized_legendre(int l, int m, double cos_theta);

}  // namespace qxfer
