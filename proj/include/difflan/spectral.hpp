#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "difflan/drift.hpp"
#include "difflan/grid.hpp"
#include "difflan/model.hpp"
#include "difflan/tridiag.hpp"

namespace difflan {

/// Flux-form discretization of f'' + b f' with zero-flux (Neumann)
/// boundary faces, assembled directly in divergence form
///   (L f)_i = N^2 / mu_i * [mu_{i+1/2} (f_{i+1}-f_i) - mu_{i-1/2} (f_i-f_{i-1})]
/// with geometric-mean face weights. This keeps the operator exactly
/// self-adjoint in the discrete L2(mu) product, gives exact zero row
/// sums (L 1 = 0), and symmetrizes to a tridiagonal matrix under the
/// sqrt(mu) similarity transform.
class GeneratorMatrix {
 public:
  GeneratorMatrix(const DriftSpec& drift, const InvariantDensity& density, const Grid& grid);

  const Grid& grid() const { return grid_; }
  const InvariantDensity& density() const { return density_; }

  /// Untransformed operator applied to a grid function.
  void apply(std::span<const double> f, std::span<double> out) const;

  /// Symmetrized matrix D^{1/2} L D^{-1/2}, D = diag(mu).
  const SymmetricTridiagonal& symmetrized() const { return sym_; }

  std::span<const double> sqrt_density() const { return sqrt_mu_; }

  /// max_i |sum_j L_ij|; identically zero up to rounding.
  double max_row_sum() const;

 private:
  Grid grid_;
  InvariantDensity density_;
  std::vector<double> face_plus_;   // mu_{i+1/2}/mu_i
  std::vector<double> face_minus_;  // mu_{i-1/2}/mu_i
  std::vector<double> sqrt_mu_;
  SymmetricTridiagonal sym_;
};

/// Eigenpairs (lambda_j, u_j) of the generator, mu-orthonormal on the
/// grid, ordered by decreasing eigenvalue. Mode 0 is the exact kernel
/// (lambda_0 = 0, u_0 = 1), which the zero-row-sum assembly guarantees.
class SpectralDecomposition {
 public:
  SpectralDecomposition(const GeneratorMatrix& generator, std::size_t mode_count);

  std::size_t mode_count() const { return lambda_.size(); }
  double eigenvalue(std::size_t j) const { return lambda_[j]; }
  std::span<const double> eigenvalues() const { return lambda_; }
  std::span<const double> mode(std::size_t j) const { return modes_[j]; }
  /// Central-difference derivative of mode j (cached).
  std::span<const double> mode_derivative(std::size_t j) const;

  const Grid& grid() const { return density_->grid(); }
  const InvariantDensity& density() const { return *density_; }
  const DriftSpec& drift() const { return drift_; }

  /// Lower sandwich rate c = pi^2 min(mu)/max(mu): lambda_j <= -c j^2.
  double sandwich_lower_rate() const { return sandwich_lower_rate_; }

  /// Modes needed so the truncated spectral weight at time t falls
  /// below 1e-14: min(N/2, ceil(sqrt(ln(1e14)/(c t))) + 4).
  std::size_t modes_for_time(double t) const;

  /// Eigenvalues of the generator assembled at `drift` on an N-cell
  /// grid, Richardson-extrapolated over (N, 2N); eigenvalues only.
  static std::vector<double> richardson_eigenvalues(const DriftSpec& drift, std::size_t n_cells,
                                                    std::size_t count);

 private:
  DriftSpec drift_;
  std::shared_ptr<const InvariantDensity> density_;
  std::vector<double> lambda_;
  std::vector<std::vector<double>> modes_;
  mutable std::vector<std::vector<double>> mode_derivs_;
  double sandwich_lower_rate_ = 0.0;
};

/// Per-mode diagnostics backing the `spectrum` report.
struct DiagnosticsReport {
  struct Row {
    std::size_t j;
    double lambda;
    double rayleigh_residual;  // ||L u_j - lambda_j u_j|| / max(|lambda_j|, 1)
    double sandwich_ratio;     // lambda_j / (-j^2 pi^2), j >= 1
  };
  std::vector<Row> rows;
  double orthonormality_defect = 0.0;
  double u0_defect = 0.0;
  double lambda0_abs = 0.0;
  double sandwich_low = 0.0;   // min(mu)/max(mu)
  double sandwich_high = 0.0;  // max(mu)/min(mu)
  double sandwich_tolerance = 0.01;
  bool passed = false;

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
};

DiagnosticsReport spectral_diagnostics(const SpectralDecomposition& dec);

/// Log-log growth of discrete H^1/H^2 norms of u_j against |lambda_j|.
struct GrowthReport {
  double slope_h1 = 0.0;
  double slope_h2 = 0.0;
  std::size_t j_lo = 0, j_hi = 0;
  bool passed = false;

  nlohmann::ordered_json to_json() const;
};

GrowthReport sobolev_growth_check(const SpectralDecomposition& dec);

}  // namespace difflan
