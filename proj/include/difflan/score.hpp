#pragma once

#include <memory>
#include <span>
#include <vector>

#include "difflan/kernel.hpp"
#include "difflan/spectral.hpp"
#include "difflan/util.hpp"

namespace difflan {

/// Mode-coupling data behind the closed-form drift derivative of the
/// transition density:
///   g_{jk} = <h u_k', u_j>_{L2(mu)}   (discrete derivative convention)
///   w_{jk}(D) = (e^{lambda_k D} - e^{lambda_j D}) / (lambda_k - lambda_j),
/// with the analytic limit D e^{lambda D} taking over below a relative
/// eigenvalue gap of 1e-8.
class CouplingTable {
 public:
  CouplingTable(const SpectralDecomposition& dec, const DriftSpec& direction, double delta);

  std::size_t size() const { return m_; }
  double g(std::size_t j, std::size_t k) const { return g_(j, k); }
  double w(std::size_t j, std::size_t k) const { return w_(j, k); }
  double delta() const { return delta_; }

 private:
  std::size_t m_;
  double delta_;
  GridMatrix g_, w_;
};

/// D(x,y) = mu(y) sum_{j,k} w_{jk} g_{jk} u_j(x) u_k(y): the derivative
/// at 0 of eta -> p_{Delta, b + eta h}(x, y), assembled on the grid.
/// Requires a sine-series direction and Delta >= t_min.
GridMatrix derivative_field(const SpectralDecomposition& dec, const DriftSpec& direction,
                            double delta, double t_min = kDefaultTMin);

/// Score field S = D / p_Delta on the product grid, with bilinear
/// point evaluation for off-node sample pairs.
class ScoreField {
 public:
  ScoreField(std::shared_ptr<const SpectralDecomposition> dec, const DriftSpec& direction,
             double delta, double t_min = kDefaultTMin);

  double delta() const { return delta_; }
  const DriftSpec& direction() const { return direction_; }
  const SpectralDecomposition& decomposition() const { return *dec_; }

  const GridMatrix& values() const { return s_; }
  const GridMatrix& derivative_values() const { return d_; }
  const GridMatrix& density_values() const { return p_; }

  /// Bilinear interpolation of the grid score values.
  double operator()(double x, double y) const;

  /// sup_x |(1/N) sum_y S(x,y) p(x,y)|: the martingale-centering defect.
  double centering_defect() const;

 private:
  std::shared_ptr<const SpectralDecomposition> dec_;
  DriftSpec direction_;
  double delta_;
  GridMatrix d_, p_, s_;
};

/// <A_b f, A_b g>_{L2(p mu)} by double midpoint quadrature. Both fields
/// must share the decomposition and sampling distance.
double lan_inner(const ScoreField& a, const ScoreField& b);
double lan_norm_squared(const ScoreField& a);

/// Direct numerical score: central difference of log p_{Delta, b + eta h}
/// in eta, rebuilding the full spectral pipeline at b +- eta h.
/// Test oracle for the closed-form route.
GridMatrix score_fd_oracle(const DriftSpec& b, const DriftSpec& h, double delta, double eta,
                           std::size_t n_cells, std::size_t modes);

/// Same differencing applied to p itself (not log p); oracle for
/// derivative_field.
GridMatrix derivative_fd_oracle(const DriftSpec& b, const DriftSpec& h, double delta, double eta,
                                std::size_t n_cells, std::size_t modes);

/// 32-node Gauss-Legendre time quadrature of the interaction-picture
/// integrand, routed through semigroup_apply and the d1 kernel slices;
/// independent of the closed-form w table. Columns are evaluated at
/// every `stride`-th y node; the result has n/stride columns.
GridMatrix derivative_gl_oracle(const SpectralDecomposition& dec, const DriftSpec& h,
                                double delta, std::size_t quadrature_nodes = 32,
                                std::size_t stride = 1);

}  // namespace difflan
