#include "qxfer/scheme.hpp"

#include <charconv>
#include <cmath>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qxfer/error.hpp"

namespace qxfer {
namespace {

constexpr double kUnitTolerance = 1e-4;

std::vector<std::vector<double>> parse_rows(std::string_view text, const char* what) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;

    std::vector<double> row;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      std::string_view token = line.substr(i, j - i);
      double value = 0.0;
      const char* first = token.data();
      const char* last = token.data() + token.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw DataError(std::string(what) + ": non-numeric token '" + std::string(token) + "'");
      }
      row.push_back(value);
      i = j;
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void validate_entries(const std::vector<GradientEntry>& entries, double b0_threshold) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!(e.bval >= 0.0) || !std::isfinite(e.bval)) {
      throw DataError("gradient " + std::to_string(i) + ": b-value must be finite and >= 0");
    }
    if (!e.bvec.allFinite()) {
      throw DataError("gradient " + std::to_string(i) + ": non-finite direction");
    }
    if (e.bval > b0_threshold) {
      const double norm = e.bvec.norm();
      if (norm == 0.0) {
        throw DataError("gradient " + std::to_string(i) + ": b = " + std::to_string(e.bval) +
                        " with zero-norm direction");
      }
      if (std::abs(norm - 1.0) > kUnitTolerance) {
        throw DataError("gradient " + std::to_string(i) + ": direction is not unit length (norm " +
                        std::to_string(norm) + ")");
      }
    }
  }
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

GradientScheme::GradientScheme(std::vector<GradientEntry> entries, double b0_threshold,
                               double tau)
    : entries_(std::move(entries)), b0_threshold_(b0_threshold), tau_(tau) {
  if (!(b0_threshold_ >= 0.0)) throw DataError("b0 threshold must be >= 0");
  if (!(tau_ > 0.0)) throw DataError("diffusion time tau must be > 0");
  validate_entries(entries_, b0_threshold_);
}

std::vector<std::size_t> GradientScheme::b0_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (is_b0(i)) out.push_back(i);
  return out;
}

std::vector<std::size_t> GradientScheme::dw_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (!is_b0(i)) out.push_back(i);
  return out;
}

GradientScheme GradientScheme::subset(std::span<const std::size_t> indices) const {
  std::vector<GradientEntry> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(entries_.at(i));
  return GradientScheme(std::move(picked), b0_threshold_, tau_);
}

std::uint64_t GradientScheme::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : entries_) {
    h = fnv1a(h, &e.bval, sizeof(double));
    h = fnv1a(h, e.bvec.data(), 3 * sizeof(double));
  }
  h = fnv1a(h, &b0_threshold_, sizeof(double));
  h = fnv1a(h, &tau_, sizeof(double));
  return h;
}

std::vector<QPoint> q_coordinates(const GradientScheme& scheme) {
  std::vector<QPoint> points(scheme.size());
  const double denom = 4.0 * std::numbers::pi * std::numbers::pi * scheme.tau();
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const auto& e = scheme[i];
    QPoint& p = points[i];
    p.magnitude = std::sqrt(e.bval / denom);
    const double norm = e.bvec.norm();
    if (p.magnitude > 0.0 && norm > 0.0) {
      p.direction = e.bvec / norm;
    }
  }
  return points;
}

GradientScheme parse_fsl_gradients(std::string_view bval_text, std::string_view bvec_text,
                                   double b0_threshold, double tau) {
  auto bval_rows = parse_rows(bval_text, "bvals");
  auto bvec_rows = parse_rows(bvec_text, "bvecs");
  if (bval_rows.size() != 1) {
    throw DataError("bvals: expected one row, found " + std::to_string(bval_rows.size()));
  }
  if (bvec_rows.size() != 3) {
    throw DataError("bvecs: expected three rows, found " + std::to_string(bvec_rows.size()));
  }
  const std::size_t m = bval_rows[0].size();
  for (std::size_t r = 0; r < 3; ++r) {
    if (bvec_rows[r].size() != m) {
      throw DataError("bvecs row " + std::to_string(r) + " has " +
                      std::to_string(bvec_rows[r].size()) + " columns, bvals has " +
                      std::to_string(m));
    }
  }
  std::vector<GradientEntry> entries(m);
  for (std::size_t i = 0; i < m; ++i) {
    entries[i].bval = bval_rows[0][i];
    entries[i].bvec = {bvec_rows[0][i], bvec_rows[1][i], bvec_rows[2][i]};
  }
  return GradientScheme(std::move(entries), b0_threshold, tau);
}

std::pair<std::string, std::string> format_fsl_gradients(const GradientScheme& scheme) {
  std::ostringstream bvals;
  std::ostringstream bvecs;
  bvals << std::setprecision(6);
  bvecs << std::setprecision(6);
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    if (i) bvals << ' ';
    bvals << scheme[i].bval;
  }
  bvals << '\n';
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < scheme.size(); ++i) {
      if (i) bvecs << ' ';
      double v = scheme[i].bvec[axis];
      bvecs << (v == 0.0 ? 0.0 : v);  // no "-0"
    }
    bvecs << '\n';
  }
  return {bvals.str(), bvecs.str()};
}

GradientScheme read_fsl_gradients(const std::filesystem::path& bvals,
                                  const std::filesystem::path& bvecs, double b0_threshold,
                                  double tau) {
  return parse_fsl_gradients(slurp(bvals), slurp(bvecs), b0_threshold, tau);
}

void write_fsl_gradients(const GradientScheme& scheme, const std::filesystem::path& bvals,
                         const std::filesystem::path& bvecs) {
  auto [vals, vecs] = format_fsl_gradients(scheme);
  std::ofstream a(bvals, std::ios::binary);
  std::ofstream b(bvecs, std::ios::binary);
  if (!a || !b) throw DataError("cannot write gradient files " + bvals.string());
  a << vals;
  b << vecs;
}

}  // namespace qxfer
