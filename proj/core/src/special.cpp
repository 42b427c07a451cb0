#include "qxfer/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qxfer {

double laguerre(int k, double alpha, double x) {
  if (k < 0) throw std::invalid_argument("laguerre: k must be >= 0");
  double prev = 1.0;
  if (k == 0) return prev;
  double curr = 1.0 + alpha - x;
  for (int j = 2; j <= k; ++j) {
    const double next = ((2.0 * j - 1.0 + alpha - x) * curr - (j - 1.0 + alpha) * prev) / j;
    prev = curr;
    curr = next;
  }
  return curr;
}

double normalized_legendre(int l, int m, double x) {
  if (m < 0 || m > l) throw std::invalid_argument("normalized_legendre: need 0 <= m <= l");
  const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));

  // Sectoral seed p_m^m, then upward in l at fixed m.
  double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int k = 1; k <= m; ++k) pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
  if (l == m) return pmm;

  double pm1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
  if (l == m + 1) return pm1;

  double p_prev = pmm;
  double p_curr = pm1;
  for (int k = m + 2; k <= l; ++k) {
    const double kk = static_cast<double>(k) * k;
    const double mm = static_cast<double>(m) * m;
    const double a = std::sqrt((4.0 * kk - 1.0) / (kk - mm));
    const double b = std::sqrt(((k - 1.0) * (k - 1.0) - mm) / (4.0 * (k - 1.0) * (k - 1.0) - 1.0));
    const double p_next = a * (x * p_curr - b * p_prev);
    p_prev = p_curr;
    p_curr = p_next;
  }
  return p_curr;
}

double real_sph_harm(int l, int m, const Eigen::Vector3d& direction) {
  if (l < 0 || std::abs(m) > l) throw std::invalid_argument("real_sph_harm: need |m| <= l");
  const double norm = direction.norm();
  const double cos_theta = norm > 0.0 ? std::clamp(direction.z() / norm, -1.0, 1.0) : 1.0;
  const double p = normalized_legendre(l, std::abs(m), cos_theta);
  if (m == 0) return p;
  const double phi = std::atan2(direction.y(), direction.x());
  if (m > 0) return std::numbers::sqrt2 * p * std::cos(m * phi);
  return std::numbers::sqrt2 * p * std::sin(-m * phi);
}

}  // namespace qxfer
