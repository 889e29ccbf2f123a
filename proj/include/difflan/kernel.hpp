#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "difflan/spectral.hpp"
#include "difflan/util.hpp"

namespace difflan {

inline constexpr double kDefaultTMin = 0.05;

/// Transition density p_t(x,y) = sum_j e^{lambda_j t} u_j(x) u_j(y) mu(y),
/// truncated where the spectral weight falls below 1e-14. Off-node
/// arguments are evaluated by piecewise-linear interpolation of the
/// eigenfunctions, not of the assembled kernel.
class HeatKernel {
 public:
  /// Throws std::invalid_argument if t < t_min (the truncated series is
  /// not trustworthy on this grid below that time) or if the
  /// decomposition carries too few modes for the requested time.
  HeatKernel(const SpectralDecomposition& dec, double t, double t_min = kDefaultTMin);

  double time() const { return t_; }
  std::size_t active_modes() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }

  /// p_t(x,y); asserts positivity of the result.
  double operator()(double x, double y) const;

  /// d/dx p_t(x,y), using the cached central-difference eigenfunction
  /// derivatives.
  double d1(double x, double y) const;

  /// Row p_t(x, y_j) over all grid nodes.
  void row(double x, std::span<double> out) const;

  /// Dense node-by-node kernel matrix, p(i,j) = p_t(x_i, x_j).
  GridMatrix matrix() const;

  const SpectralDecomposition& decomposition() const { return dec_; }

 private:
  const SpectralDecomposition& dec_;
  double t_;
  std::vector<double> weights_;  // e^{lambda_j t}, truncated below 1e-14
};

/// P_t f on the grid via the spectral representation; t = 0 reproduces
/// the projection of f onto the retained modes.
std::vector<double> semigroup_apply(const SpectralDecomposition& dec, double t,
                                    std::span<const double> f);

/// Sup-norm defects of the exact semigroup laws on the grid.
struct IdentityReport {
  struct Row {
    double t;
    double mass_defect;              // sup_x |(1/N) sum_y p_t(x,y) - 1|
    double detailed_balance_defect;  // sup |mu(x) p(x,y) - mu(y) p(y,x)|
    double chapman_defect;           // sup |(1/N) sum_z p_t(x,z) p_t(z,y) - p_{2t}(x,y)|
    double min_p, max_p;
  };
  std::vector<Row> rows;
  double threshold = 1e-7;
  bool passed = false;

  nlohmann::ordered_json to_json() const;
};

IdentityReport kernel_identity_checks(const SpectralDecomposition& dec,
                                      std::span<const double> times,
                                      double t_min = kDefaultTMin);

}  // namespace difflan
