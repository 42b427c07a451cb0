#include "qxfer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "qxfer/error.hpp"

namespace qxfer {
namespace {

constexpr int kMaxIterations = 300;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

double sample_sd(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double mean_abs_error(const Volume& estimate, const Volume& gold, const Volume& mask) {
  if (!estimate.same_grid(gold) || !estimate.same_grid(mask)) {
    throw DataError("estimate, gold standard and mask must share one grid");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < mask.voxel_count(); ++v) {
    if (mask.data()[v] == 0.0) continue;
    sum += std::abs(estimate.data()[v] - gold.data()[v]);
    ++n;
  }
  if (n == 0) throw DataError("error mask is empty");
  return sum / static_cast<double>(n);
}

Volume exclude_fluid(const Volume& mask, const Volume& f_iso, double threshold) {
  if (!mask.same_grid(f_iso)) throw DataError("mask and f_iso grids differ");
  Volume out(mask.header());
  for (std::size_t v = 0; v < mask.voxel_count(); ++v) {
    out.data()[v] = (mask.data()[v] != 0.0 && f_iso.data()[v] < threshold) ? 1.0 : 0.0;
  }
  return out;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("t distribution needs dof > 0");
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired t-test needs equal-length samples");
  if (a.size() < 2) throw DataError("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double mean = mean_of(d);
  const double sd = sample_sd(d, mean);
  if (!(sd > 0.0)) throw DataError("paired differences have zero variance");

  TTestResult r;
  r.dof = d.size() - 1;
  r.mean_difference = mean;
  r.t = mean / (sd / std::sqrt(static_cast<double>(d.size())));
  const double nu = static_cast<double>(r.dof);
  r.p = std::min(1.0, regularized_incomplete_beta(0.5 * nu, 0.5, nu / (nu + r.t * r.t)));
  return r;
}

void ErrorTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw DataError("error table row has " + std::to_string(row.size()) + " values for " +
                    std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

std::vector<double> ErrorTable::column(std::size_t c) const {
  if (c >= columns.size()) throw std::out_of_range("error table column index");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::vector<double> ErrorTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no error table column '" + name + "'");
  return column(static_cast<std::size_t>(it - columns.begin()));
}

Summary summarize(const ErrorTable& table) {
  if (table.rows.empty() || table.columns.empty()) throw DataError("cannot summarize an empty table");
  Summary s;
  s.single_subject = table.rows.size() == 1;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const auto col = table.column(c);
    const double m = mean_of(col);
    s.columns.push_back({table.columns[c], m, sample_sd(col, m)});
  }
  return s;
}

void write_tsv(const std::filesystem::path& path, const ErrorTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "subject";
  for (const auto& c : table.columns) out << '\t' << c;
  out << '\n' << std::setprecision(9);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << r;
    for (double v : table.rows[r]) out << '\t' << v;
    out << '\n';
  }
}

void write_key_values(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [k, v] : values) out << k << " = " << v << '\n';
}

}  // namespace qxfer
