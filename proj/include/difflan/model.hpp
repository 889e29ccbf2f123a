#pragma once

#include <span>
#include <vector>

#include "difflan/drift.hpp"
#include "difflan/grid.hpp"

namespace difflan {

/// Stationary density mu(x) = exp(B(x)) / Z on the grid, with B the exact
/// antiderivative of the drift and Z the midpoint-rule normalizer. Using
/// the same grid and quadrature as every downstream consumer keeps the
/// discrete identities (normalization, orthogonality, conservation) exact
/// instead of approximate.
class InvariantDensity {
 public:
  InvariantDensity(const DriftSpec& drift, const Grid& grid);

  const Grid& grid() const { return grid_; }
  const DriftSpec& drift() const { return drift_; }

  std::span<const double> values() const { return values_; }
  double value(std::size_t i) const { return values_[i]; }

  /// Piecewise-linear interpolation of the node values.
  double value_at(double x) const { return grid_.interpolate(values_, x); }

  /// Exact log density B(x) - log Z, valid for any x in [0,1].
  double log_value_at(double x) const;

  /// Midpoint normalizer Z = (1/N) sum exp(B(x_i)).
  double normalizer() const { return normalizer_; }

  double min_value() const { return min_value_; }
  double max_value() const { return max_value_; }

 private:
  DriftSpec drift_;
  Grid grid_;
  std::vector<double> values_;
  double normalizer_ = 0.0;
  double min_value_ = 0.0;
  double max_value_ = 0.0;
};

}  // namespace difflan
