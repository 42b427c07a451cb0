#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace qxfer {

/// Diffusion time for which |q| = sqrt(b).
inline constexpr double kDefaultTau = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi);
/// b-values at or below this are treated as unweighted (b0) acquisitions.
inline constexpr double kDefaultB0Threshold = 10.0;

struct GradientEntry {
  double bval = 0.0;                           // s/mm^2
  Eigen::Vector3d bvec = Eigen::Vector3d::Zero();  // unit vector, or zero for b0
};

/// An ordered set of diffusion encodings (b-value + direction).
///
/// Entries with bval > b0_threshold must carry a unit direction (norm within
/// 1e-4 of 1). b0 entries may carry a zero vector. The object is immutable
/// after construction.
class GradientScheme {
 public:
  GradientScheme() = default;
  explicit GradientScheme(std::vector<GradientEntry> entries,
                          double b0_threshold = kDefaultB0Threshold,
                          double tau = kDefaultTau);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const GradientEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<GradientEntry>& entries() const { return entries_; }

  double b0_threshold() const { return b0_threshold_; }
  double tau() const { return tau_; }

  bool is_b0(std::size_t i) const { return entries_[i].bval <= b0_threshold_; }
  std::vector<std::size_t> b0_indices() const;
  std::vector<std::size_t> dw_indices() const;

  /// Entries at the given positions, in the given order.
  GradientScheme subset(std::span<const std::size_t> indices) const;

  /// Stable 64-bit hash of the entries and mapping parameters.
  std::uint64_t fingerprint() const;

 private:
  std::vector<GradientEntry> entries_;
  double b0_threshold_ = kDefaultB0Threshold;
  double tau_ = kDefaultTau;
};

/// A q-space sample: magnitude sqrt(b / (4 pi^2 tau)) and unit direction.
/// Zero-magnitude points use the direction (0, 0, 1).
struct QPoint {
  double magnitude = 0.0;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
};

std::vector<QPoint> q_coordinates(const GradientScheme& scheme);

/// Parses FSL-style gradient text: one row of M b-values and three rows of
/// M direction components. Throws DataError on malformed input.
GradientScheme parse_fsl_gradients(std::string_view bval_text, std::string_view bvec_text,
                                   double b0_threshold = kDefaultB0Threshold,
                                   double tau = kDefaultTau);

/// FSL text (bvals, bvecs), 6 significant digits.
std::pair<std::string, std::string> format_fsl_gradients(const GradientScheme& scheme);

GradientScheme read_fsl_gradients(const std::filesystem::path& bvals,
                                  const std::filesystem::path& bvecs,
                                  double b0_threshold = kDefaultB0Threshold,
                                  double tau = kDefaultTau);
void write_fsl_gradients(const GradientScheme& scheme, const std::filesystem::path& bvals,
                         const std::filesystem::path& bvecs);

}  // namespace qxfer
