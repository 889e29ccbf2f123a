#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace difflan {

/// Dense row-major matrix over grid nodes.
class GridMatrix {
 public:
  GridMatrix() = default;
  GridMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  std::span<double> row(std::size_t i) { return {a_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * cols_, cols_}; }
  std::span<const double> data() const { return a_; }
  std::span<double> data() { return a_; }

  double max_abs() const;

  /// CSV dump, x as rows and y as columns, full double precision.
  std::string to_csv() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

/// sup |a - b| / max(sup |b|, floor); the field-relative defect used by
/// every matrix comparison in the tests and reports.
double field_relative_defect(const GridMatrix& a, const GridMatrix& b, double floor = 1e-300);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results
/// must be written to per-index slots; the partition is deterministic
/// and does not affect output values.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Worker cap: explicit argument if nonzero, else DIFFLAN_THREADS, else
/// hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

std::string format_double(double v);

}  // namespace difflan
