#include "difflan/score.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "difflan/errors.hpp"

namespace difflan {

namespace {

// (e^{a D} - e^{b D}) / (a - b). The direct quotient is stable for
// separated eigenvalues; the analytic limit D e^{a D} (expanded to
// second order around the midpoint) covers the nearly degenerate case,
// with the relative-gap switch at 1e-8.
double time_factor(double la, double lb, double delta) {
  const double gap = std::abs(la - lb);
  if (gap <= 1e-8 * std::max({std::abs(la), std::abs(lb), 1.0})) {
    const double mean = 0.5 * (la + lb);
    const double z = 0.5 * (la - lb) * delta;
    return delta * std::exp(mean * delta) * (1.0 + z * z / 6.0);
  }
  return (std::exp(la * delta) - std::exp(lb * delta)) / (la - lb);
}

void require_sine_direction(const DriftSpec& direction) {
  if (!direction.is_sine()) {
    throw ConfigError("score: perturbation direction must be a sine series");
  }
}

}  // namespace

CouplingTable::CouplingTable(const SpectralDecomposition& dec, const DriftSpec& direction,
                             double delta)
    : m_(dec.mode_count()), delta_(delta), g_(m_, m_), w_(m_, m_) {
  require_sine_direction(direction);
  const Grid& grid = dec.grid();
  const std::size_t n = grid.size();
  const auto mu = dec.density().values();

  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = direction(grid.node(i));

  std::vector<double> hduk(n);
  for (std::size_t k = 0; k < m_; ++k) {
    const auto duk = dec.mode_derivative(k);
    for (std::size_t i = 0; i < n; ++i) hduk[i] = h[i] * duk[i];
    for (std::size_t j = 0; j < m_; ++j) {
      g_(j, k) = grid.inner(hduk, dec.mode(j), mu);
    }
  }
  for (std::size_t j = 0; j < m_; ++j) {
    for (std::size_t k = 0; k < m_; ++k) {
      w_(j, k) = time_factor(dec.eigenvalue(j), dec.eigenvalue(k), delta);
    }
  }
}

GridMatrix derivative_field(const SpectralDecomposition& dec, const DriftSpec& direction,
                            double delta, double t_min) {
  if (!(delta >= t_min)) {
    throw std::invalid_argument("derivative_field: Delta below t_min");
  }
  require_sine_direction(direction);
  const CouplingTable table(dec, direction, delta);
  const Grid& grid = dec.grid();
  const std::size_t n = grid.size();
  const std::size_t m = table.size();
  const auto mu = dec.density().values();

  // D = U (w . g) (U mu)^T, assembled as rank-1 updates per (j,k).
  GridMatrix coef(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) coef(j, k) = table.w(j, k) * table.g(j, k);
  }

  GridMatrix out(n, n, 0.0);
  std::vector<double> yk(n);
  for (std::size_t k = 0; k < m; ++k) {
    const auto uk = dec.mode(k);
    for (std::size_t i = 0; i < n; ++i) yk[i] = uk[i] * mu[i];
    for (std::size_t j = 0; j < m; ++j) {
      const double c = coef(j, k);
      if (c == 0.0) continue;
      const auto uj = dec.mode(j);
      for (std::size_t ix = 0; ix < n; ++ix) {
        const double cx = c * uj[ix];
        double* row = &out(ix, 0);
        for (std::size_t iy = 0; iy < n; ++iy) row[iy] += cx * yk[iy];
      }
    }
  }
  return out;
}

ScoreField::ScoreField(std::shared_ptr<const SpectralDecomposition> dec,
                       const DriftSpec& direction, double delta, double t_min)
    : dec_(std::move(dec)), direction_(direction), delta_(delta) {
  d_ = derivative_field(*dec_, direction, delta, t_min);
  p_ = HeatKernel(*dec_, delta, t_min).matrix();
  const std::size_t n = dec_->grid().size();
  s_ = GridMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (p_(i, j) < 1e-8) {
        throw NumericError("score_field: transition density below positivity floor at (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
      }
      s_(i, j) = d_(i, j) / p_(i, j);
    }
  }
}

double ScoreField::operator()(double x, double y) const {
  const Grid& grid = dec_->grid();
  const auto lx = grid.locate(x);
  const auto ly = grid.locate(y);
  const double s00 = s_(lx.cell, ly.cell);
  const double s10 = s_(lx.cell + 1, ly.cell);
  const double s01 = s_(lx.cell, ly.cell + 1);
  const double s11 = s_(lx.cell + 1, ly.cell + 1);
  return s00 * (1.0 - lx.frac) * (1.0 - ly.frac) + s10 * lx.frac * (1.0 - ly.frac) +
         s01 * (1.0 - lx.frac) * ly.frac + s11 * lx.frac * ly.frac;
}

double ScoreField::centering_defect() const {
  const std::size_t n = dec_->grid().size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += s_(i, j) * p_(i, j);
    worst = std::max(worst, std::abs(s / static_cast<double>(n)));
  }
  return worst;
}

double lan_inner(const ScoreField& a, const ScoreField& b) {
  if (&a.decomposition() != &b.decomposition() || a.delta() != b.delta()) {
    throw std::invalid_argument("lan_inner: fields must share the decomposition and Delta");
  }
  const Grid& grid = a.decomposition().grid();
  const std::size_t n = grid.size();
  const auto mu = a.decomposition().density().values();
  const GridMatrix& sa = a.values();
  const GridMatrix& sb = b.values();
  const GridMatrix& p = a.density_values();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += sa(i, j) * sb(i, j) * p(i, j);
    total += row * mu[i];
  }
  return total / (static_cast<double>(n) * static_cast<double>(n));
}

double lan_norm_squared(const ScoreField& a) { return lan_inner(a, a); }

namespace {

GridMatrix kernel_matrix_for(const DriftSpec& drift, double delta, std::size_t n_cells,
                             std::size_t modes) {
  Grid grid(n_cells);
  InvariantDensity mu(drift, grid);
  GeneratorMatrix gen(drift, mu, grid);
  SpectralDecomposition dec(gen, modes);
  return HeatKernel(dec, delta).matrix();
}

}  // namespace

GridMatrix score_fd_oracle(const DriftSpec& b, const DriftSpec& h, double delta, double eta,
                           std::size_t n_cells, std::size_t modes) {
  if (!(eta >= 1e-4 && eta <= 1e-2)) {
    throw std::invalid_argument("score_fd_oracle: eta must lie in [1e-4, 1e-2]");
  }
  const GridMatrix plus = kernel_matrix_for(b.plus(h, eta), delta, n_cells, modes);
  const GridMatrix minus = kernel_matrix_for(b.plus(h, -eta), delta, n_cells, modes);
  GridMatrix out(plus.rows(), plus.cols());
  for (std::size_t i = 0; i < plus.rows(); ++i) {
    for (std::size_t j = 0; j < plus.cols(); ++j) {
      out(i, j) = (std::log(plus(i, j)) - std::log(minus(i, j))) / (2.0 * eta);
    }
  }
  return out;
}

GridMatrix derivative_fd_oracle(const DriftSpec& b, const DriftSpec& h, double delta, double eta,
                                std::size_t n_cells, std::size_t modes) {
  const GridMatrix plus = kernel_matrix_for(b.plus(h, eta), delta, n_cells, modes);
  const GridMatrix minus = kernel_matrix_for(b.plus(h, -eta), delta, n_cells, modes);
  GridMatrix out(plus.rows(), plus.cols());
  for (std::size_t i = 0; i < plus.rows(); ++i) {
    for (std::size_t j = 0; j < plus.cols(); ++j) {
      out(i, j) = (plus(i, j) - minus(i, j)) / (2.0 * eta);
    }
  }
  return out;
}

GridMatrix derivative_gl_oracle(const SpectralDecomposition& dec, const DriftSpec& h,
                                double delta, std::size_t quadrature_nodes,
                                std::size_t stride) {
  // Nodes/weights for Gauss-Legendre on [-1,1] by Newton iteration on
  // the Legendre recurrence, then mapped to [0, delta].
  const std::size_t q = quadrature_nodes;
  std::vector<double> node(q), weight(q);
  for (std::size_t i = 0; i < (q + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(q) + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 0; k < q; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * static_cast<double>(k) + 1.0) * x * p1 - static_cast<double>(k) * p2) /
             (static_cast<double>(k) + 1.0);
      }
      const double dp = static_cast<double>(q) * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * static_cast<double>(k) + 1.0) * x * p1 - static_cast<double>(k) * p2) /
           (static_cast<double>(k) + 1.0);
    }
    const double dp = static_cast<double>(q) * (x * p0 - p1) / (x * x - 1.0);
    node[i] = -x;
    node[q - 1 - i] = x;
    weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    weight[q - 1 - i] = weight[i];
  }

  const Grid& grid = dec.grid();
  const std::size_t n = grid.size();
  const auto mu = dec.density().values();
  std::vector<double> hvals(n);
  for (std::size_t i = 0; i < n; ++i) hvals[i] = h(grid.node(i));

  const std::size_t ny = (n + stride - 1) / stride;
  GridMatrix out(n, ny, 0.0);
  std::vector<double> slice(n);
  for (std::size_t iq = 0; iq < q; ++iq) {
    const double s = 0.5 * delta * (node[iq] + 1.0);
    const double ws = 0.5 * delta * weight[iq];
    // integrand column for fixed y: P_{delta-s} [ h d1 p_s(., y) ](x)
    for (std::size_t cy = 0; cy < ny; ++cy) {
      const std::size_t iy = cy * stride;
      for (std::size_t i = 0; i < n; ++i) slice[i] = 0.0;
      for (std::size_t k = 0; k < dec.mode_count(); ++k) {
        const double wk = std::exp(dec.eigenvalue(k) * s);
        if (k > 0 && wk < 1e-16) break;
        const auto duk = dec.mode_derivative(k);
        const double c = wk * dec.mode(k)[iy] * mu[iy];
        for (std::size_t i = 0; i < n; ++i) slice[i] += c * duk[i];
      }
      for (std::size_t i = 0; i < n; ++i) slice[i] *= hvals[i];
      const std::vector<double> prop = semigroup_apply(dec, delta - s, slice);
      for (std::size_t ix = 0; ix < n; ++ix) out(ix, cy) += ws * prop[ix];
    }
  }
  return out;
}

}  // namespace difflan
