#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qxfer/volume.hpp"

namespace qxfer {

/// Ground-truth isotropic fraction at or above which a phantom voxel counts
/// as fluid and is left out of error statistics.
inline constexpr double kFluidThreshold = 0.9;

/// Mean of |estimate - gold| over nonzero mask voxels. Throws DataError on
/// mismatched grids or an empty mask.
double mean_abs_error(const Volume& estimate, const Volume& gold, const Volume& mask);

/// mask AND (f_iso < threshold).
Volume exclude_fluid(const Volume& mask, const Volume& f_iso, double threshold = kFluidThreshold);

/// I_x(a, b), evaluated with a continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t dof = 0;
  double mean_difference = 0.0;
};

/// Paired Student's t-test on a - b. Throws DataError for unequal lengths,
/// fewer than two pairs or differences with zero spread.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Rows are subjects, columns are named error series (e.g. "mlp.f_iso").
struct ErrorTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::vector<double> column(std::size_t c) const;
  std::vector<double> column(const std::string& name) const;
};

struct ColumnSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 for a single subject
};

struct Summary {
  std::vector<ColumnSummary> columns;
  bool single_subject = false;  // sd undefined, reported as 0
};

/// Throws DataError for a table without rows or columns.
Summary summarize(const ErrorTable& table);

/// Header line of column names, then one line per subject.
void write_tsv(const std::filesystem::path& path, const ErrorTable& table);
/// `key = value` lines.
void write_key_values(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace qxfer
