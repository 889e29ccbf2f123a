#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace difflan {

/// Cell-centered uniform grid on [0,1]: N cells (power of two, N >= 16),
/// nodes x_i = (i + 1/2)/N. The midpoint rule is the single quadrature
/// convention used for every grid inner product in this project.
class Grid {
 public:
  explicit Grid(std::size_t n_cells);

  std::size_t size() const { return n_; }
  double cell_width() const { return 1.0 / static_cast<double>(n_); }
  double node(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(n_);
  }
  std::span<const double> nodes() const { return nodes_; }

  /// Midpoint quadrature: (1/N) sum_i f_i.
  double integrate(std::span<const double> f) const;

  /// Plain L2 inner product: (1/N) sum_i f_i g_i.
  double inner(std::span<const double> f, std::span<const double> g) const;

  /// Weighted inner product: (1/N) sum_i f_i g_i w_i.
  double inner(std::span<const double> f, std::span<const double> g,
               std::span<const double> weight) const;

  double norm(std::span<const double> f) const;
  double norm(std::span<const double> f, std::span<const double> weight) const;

  /// First derivative on nodes: central differences in the interior,
  /// one-sided second-order stencils at the two boundary cells.
  std::vector<double> derivative(std::span<const double> f) const;

  /// Piecewise-linear interpolation of node values, clamped to the
  /// boundary cells outside [x_0, x_{N-1}].
  double interpolate(std::span<const double> f, double x) const;

  /// Index/fraction pair used by interpolate(); exposed so bilinear
  /// consumers can share one lookup.
  struct Locator {
    std::size_t cell;  // left node index, <= N-2
    double frac;       // in [0,1]
  };
  Locator locate(double x) const;

  bool operator==(const Grid& other) const { return n_ == other.n_; }

 private:
  std::size_t n_;
  std::vector<double> nodes_;
};

}  // namespace difflan
