#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "difflan/drift.hpp"
#include "difflan/grid.hpp"
#include "difflan/kernel.hpp"
#include "difflan/spectral.hpp"
#include "difflan/util.hpp"

namespace difflan {

/// Neumann drift operator for the time-stepping lane, in flux form with
/// linearized face weights:
///   (L_d f)_i = N^2 [ (1 + beta_i)(f_{i+1}-f_i) - (1 - beta_{i-1})(f_i-f_{i-1}) ],
///   beta_i = (B(x_{i+1}) - B(x_i)) / 2,  B the exact drift antiderivative.
/// Second-order consistent with f'' + d f', zero-flux at the boundary
/// faces, and exactly affine in the drift:
///   L_{b + h} = L_b + M_h with M_h the same stencil built from h alone.
/// The affine structure makes the Taylor remainder recursion and its
/// homogeneity exact at the discrete level instead of holding only up
/// to discretization error.
class DriftOperator {
 public:
  DriftOperator(const DriftSpec& drift, const Grid& grid);

  const Grid& grid() const { return grid_; }
  const DriftSpec& drift() const { return drift_; }

  void apply(std::span<const double> f, std::span<double> out) const;

  /// The perturbation part M_h = L_{d+h} - L_d; depends on h only.
  /// Stored as a DriftOperator over h with the Laplacian removed.
  static void apply_perturbation(const DriftSpec& h, const Grid& grid,
                                 std::span<const double> f, std::span<double> out);

  std::span<const double> face_beta() const { return beta_; }

 private:
  DriftSpec drift_;
  Grid grid_;
  std::vector<double> beta_;  // faces between cells i and i+1
};

/// Time slices of a parabolic solve. Slices are stored every `stride`
/// steps (plus the final one); off-slice queries interpolate linearly.
class ParabolicSolution {
 public:
  ParabolicSolution(const Grid& grid, double horizon, std::size_t steps, std::size_t stride);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  double time_step() const { return horizon_ / static_cast<double>(steps_); }
  std::size_t stride() const { return stride_; }
  const Grid& grid() const { return grid_; }

  /// Value at integer step m (0..steps); interpolates when strided.
  std::vector<double> at_step(std::size_t m) const;
  std::span<const double> final_slice() const { return slices_.back(); }
  std::span<const double> initial_slice() const { return slices_.front(); }

  void push(std::vector<double> slice) { slices_.push_back(std::move(slice)); }
  std::size_t stored() const { return slices_.size(); }
  std::span<const double> stored_slice(std::size_t idx) const { return slices_[idx]; }

 private:
  Grid grid_;
  double horizon_;
  std::size_t steps_;
  std::size_t stride_;
  std::vector<std::vector<double>> slices_;
};

/// Step-indexed source term: fills `out` with the trapezoidal average of
/// f over [t_m, t_{m+1}] (t_mid is provided for analytic sources).
using StepSource = std::function<void(std::size_t m, double t_mid, std::span<double> out)>;

/// Crank-Nicolson integration of du/dt = L_d u + f on [0, horizon].
/// One diagonally dominant tridiagonal solve per step; second order in
/// both the time step and the cell width.
ParabolicSolution cn_solve(const DriftOperator& op, std::span<const double> initial,
                           const StepSource* source, double horizon, std::size_t steps,
                           std::size_t stride = 1);

/// cn_solve with zero initial data (the inhomogeneous solution map).
ParabolicSolution solution_operator(const DriftOperator& op, const StepSource& source,
                                    double horizon, std::size_t steps, std::size_t stride = 1);

/// Regularized point mass: the drift-free kernel row p_{delta,0}(y, .)
/// on the grid. Requires delta >= t_min of the drift-free kernel.
std::vector<double> phi_delta(double y, double delta, const SpectralDecomposition& dec_zero,
                              double t_min = kDefaultTMin);

/// Taylor remainder stack of eta -> u^delta_{b + eta h} at eta = 0:
///   R_0 = u_{b+h} - u_b,   R_k = S(M_h R_{k-1}),   v_k = R_{k-1} - R_k,
/// all propagated with the same Crank-Nicolson discretization so the
/// telescoping identity u_{b+h} = sum v_i + R_k is exact algebra.
class RemainderStack {
 public:
  RemainderStack(const DriftSpec& b, const DriftSpec& h, double y, double delta,
                 std::size_t k_max, double horizon, const Grid& grid, std::size_t steps,
                 const SpectralDecomposition& dec_zero, double t_min = kDefaultTMin);

  std::size_t k_max() const { return k_max_; }
  double regularization() const { return delta_; }
  double target() const { return y_; }

  const ParabolicSolution& base() const { return *u_b_; }            // u^delta_b
  const ParabolicSolution& perturbed() const { return *u_bh_; }      // u^delta_{b+h}
  const ParabolicSolution& remainder(std::size_t k) const { return *r_[k]; }
  std::span<const double> v_final(std::size_t k) const { return v_final_[k]; }

  /// sup over stored slices of |u_{b+h} - sum_{i<=k} v_i - R_k|.
  double telescoping_defect() const;

 private:
  DriftSpec b_, h_;
  double y_, delta_;
  std::size_t k_max_;
  std::vector<std::unique_ptr<ParabolicSolution>> r_;
  std::unique_ptr<ParabolicSolution> u_b_, u_bh_;
  std::vector<std::vector<double>> v_final_;  // v_k at the horizon
};

/// Defect sup_x |u^delta_{b+eta h}(horizon) - sum_{i<=k} eta^i v_i(horizon)|
/// per eta, with the fitted log-log slope. Saturated fits (all defects at
/// rounding level) are reported and count as passes.
struct OrderReport {
  std::size_t k = 0;
  std::vector<double> etas;
  std::vector<double> defects;
  double slope = 0.0;
  bool saturated = false;
  bool passed = false;
  double threshold = 0.0;   // k + 0.2
  double expected = 0.0;    // ~ k + 1 for an analytic map

  nlohmann::ordered_json to_json() const;
};

std::vector<OrderReport> taylor_order_study(const DriftSpec& b, const DriftSpec& h, double y,
                                            double delta, std::span<const std::size_t> orders,
                                            std::span<const double> etas, double horizon,
                                            const Grid& grid, std::size_t steps,
                                            const SpectralDecomposition& dec_zero,
                                            double t_min = kDefaultTMin);

}  // namespace difflan
