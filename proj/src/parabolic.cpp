#include "difflan/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "difflan/errors.hpp"
#include "difflan/tridiag.hpp"

namespace difflan {

DriftOperator::DriftOperator(const DriftSpec& drift, const Grid& grid)
    : drift_(drift), grid_(grid) {
  const std::size_t n = grid_.size();
  beta_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    beta_[i] = 0.5 * (drift_.antiderivative(grid_.node(i + 1)) -
                      drift_.antiderivative(grid_.node(i)));
  }
}

void DriftOperator::apply(std::span<const double> f, std::span<double> out) const {
  const std::size_t n = grid_.size();
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    if (i + 1 < n) v += (1.0 + beta_[i]) * (f[i + 1] - f[i]);
    if (i > 0) v -= (1.0 - beta_[i - 1]) * (f[i] - f[i - 1]);
    out[i] = v * n2;
  }
}

void DriftOperator::apply_perturbation(const DriftSpec& h, const Grid& grid,
                                       std::span<const double> f, std::span<double> out) {
  const std::size_t n = grid.size();
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  // M_h = L_{d+h} - L_d: only the beta terms built from h survive.
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double gamma =
        0.5 * (h.antiderivative(grid.node(i + 1)) - h.antiderivative(grid.node(i)));
    const double flux = gamma * (f[i + 1] - f[i]) * n2;
    out[i] += flux;
    out[i + 1] += flux;
  }
}

ParabolicSolution::ParabolicSolution(const Grid& grid, double horizon, std::size_t steps,
                                     std::size_t stride)
    : grid_(grid), horizon_(horizon), steps_(steps), stride_(stride) {
  if (steps == 0) throw std::invalid_argument("ParabolicSolution: zero steps");
  if (stride == 0) throw std::invalid_argument("ParabolicSolution: zero stride");
  slices_.reserve(steps / stride + 2);
}

std::vector<double> ParabolicSolution::at_step(std::size_t m) const {
  if (m > steps_) throw std::invalid_argument("ParabolicSolution: step out of range");
  const std::size_t idx = m / stride_;
  const std::size_t rem = m % stride_;
  if (rem == 0 && idx < slices_.size()) return slices_[idx];
  if (m == steps_) return slices_.back();
  // linear interpolation between stored neighbours
  const auto& lo = slices_[idx];
  const std::size_t hi_step = std::min((idx + 1) * stride_, steps_);
  const auto& hi = (idx + 1 < slices_.size()) ? slices_[idx + 1] : slices_.back();
  const double w = static_cast<double>(rem) / static_cast<double>(hi_step - idx * stride_);
  std::vector<double> out(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) out[i] = (1.0 - w) * lo[i] + w * hi[i];
  return out;
}

ParabolicSolution cn_solve(const DriftOperator& op, std::span<const double> initial,
                           const StepSource* source, double horizon, std::size_t steps,
                           std::size_t stride) {
  const Grid& grid = op.grid();
  const std::size_t n = grid.size();
  if (initial.size() != n) throw std::invalid_argument("cn_solve: initial data size mismatch");
  const double tau = horizon / static_cast<double>(steps);

  // Bands of (I - tau/2 L); strictly diagonally dominant for any tau > 0.
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const auto beta = op.face_beta();
  std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double cp = (i + 1 < n) ? (1.0 + beta[i]) * n2 : 0.0;
    double cm = (i > 0) ? (1.0 - beta[i - 1]) * n2 : 0.0;
    diag[i] = 1.0 + 0.5 * tau * (cp + cm);
    if (i + 1 < n) upper[i] = -0.5 * tau * cp;
    if (i > 0) lower[i] = -0.5 * tau * cm;
  }

  ParabolicSolution sol(grid, horizon, steps, stride);
  std::vector<double> u(initial.begin(), initial.end());
  sol.push(u);

  std::vector<double> lu(n), rhs(n), src(n);
  for (std::size_t m = 0; m < steps; ++m) {
    op.apply(u, lu);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = u[i] + 0.5 * tau * lu[i];
    if (source != nullptr) {
      const double t_mid = (static_cast<double>(m) + 0.5) * tau;
      (*source)(m, t_mid, src);
      for (std::size_t i = 0; i < n; ++i) rhs[i] += tau * src[i];
    }
    tridiagonal_solve(lower, diag, upper, rhs, u);
    if (m + 1 == steps || (m + 1) % stride == 0) sol.push(u);
  }
  return sol;
}

ParabolicSolution solution_operator(const DriftOperator& op, const StepSource& source,
                                    double horizon, std::size_t steps, std::size_t stride) {
  const std::vector<double> zero(op.grid().size(), 0.0);
  return cn_solve(op, zero, &source, horizon, steps, stride);
}

std::vector<double> phi_delta(double y, double delta, const SpectralDecomposition& dec_zero,
                              double t_min) {
  if (!dec_zero.drift().is_zero()) {
    throw ConfigError("phi_delta: decomposition must belong to the zero drift");
  }
  const HeatKernel hk(dec_zero, delta, t_min);  // refuses delta < t_min
  std::vector<double> out(dec_zero.grid().size());
  hk.row(y, out);
  for (double v : out) {
    if (v < -1e-10) {
      throw NumericError("phi_delta: negative kernel value at delta=" + std::to_string(delta));
    }
  }
  return out;
}

namespace {

// Trapezoidal source M_h applied to the stored slices of a solution.
StepSource slice_source(const DriftSpec& h, const Grid& grid, const ParabolicSolution& from) {
  return [&h, &grid, &from](std::size_t m, double /*t_mid*/, std::span<double> out) {
    const std::vector<double> lo = from.at_step(m);
    const std::vector<double> hi = from.at_step(m + 1);
    const std::size_t n = grid.size();
    std::vector<double> avg(n);
    for (std::size_t i = 0; i < n; ++i) avg[i] = 0.5 * (lo[i] + hi[i]);
    DriftOperator::apply_perturbation(h, grid, avg, out);
  };
}

}  // namespace

RemainderStack::RemainderStack(const DriftSpec& b, const DriftSpec& h, double y, double delta,
                               std::size_t k_max, double horizon, const Grid& grid,
                               std::size_t steps, const SpectralDecomposition& dec_zero,
                               double t_min)
    : b_(b), h_(h), y_(y), delta_(delta), k_max_(k_max) {
  if (k_max > 4) throw std::invalid_argument("remainder_recursion: k_max must be <= 4");
  const std::size_t stride = (k_max <= 2) ? 1 : 4;

  const std::vector<double> phi = phi_delta(y, delta, dec_zero, t_min);
  const DriftOperator op_b(b, grid);
  const DriftOperator op_bh(b.plus(h), grid);

  u_b_ = std::make_unique<ParabolicSolution>(cn_solve(op_b, phi, nullptr, horizon, steps, stride));
  u_bh_ =
      std::make_unique<ParabolicSolution>(cn_solve(op_bh, phi, nullptr, horizon, steps, stride));

  // R_0 = u_{b+h} - u_b, slice by slice.
  auto r0 = std::make_unique<ParabolicSolution>(grid, horizon, steps, stride);
  for (std::size_t s = 0; s < u_b_->stored(); ++s) {
    const auto lo = u_b_->stored_slice(s);
    const auto hi = u_bh_->stored_slice(s);
    std::vector<double> diff(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) diff[i] = hi[i] - lo[i];
    r0->push(std::move(diff));
  }
  r_.push_back(std::move(r0));

  v_final_.resize(k_max + 1);
  v_final_[0].assign(u_b_->final_slice().begin(), u_b_->final_slice().end());

  for (std::size_t k = 1; k <= k_max; ++k) {
    const StepSource src = slice_source(h, grid, *r_[k - 1]);
    auto rk = std::make_unique<ParabolicSolution>(
        solution_operator(op_b, src, horizon, steps, stride));
    const auto prev = r_[k - 1]->final_slice();
    const auto cur = rk->final_slice();
    v_final_[k].resize(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) v_final_[k][i] = prev[i] - cur[i];
    r_.push_back(std::move(rk));
  }
}

double RemainderStack::telescoping_defect() const {
  // u_{b+h} = v_0 + ... + v_{k} + R_{k} at every stored slice; v_k enters
  // as R_{k-1} - R_k, so the sum collapses to u_b + R_0 slice-wise.
  double worst = 0.0;
  const std::size_t n = u_b_->grid().size();
  for (std::size_t s = 0; s < u_b_->stored(); ++s) {
    const auto ub = u_b_->stored_slice(s);
    const auto ubh = u_bh_->stored_slice(s);
    std::vector<double> acc(ub.begin(), ub.end());  // v_0
    for (std::size_t k = 1; k <= k_max_; ++k) {
      const auto prev = r_[k - 1]->stored_slice(s);
      const auto cur = r_[k]->stored_slice(s);
      for (std::size_t i = 0; i < n; ++i) acc[i] += prev[i] - cur[i];
    }
    const auto rk = r_[k_max_]->stored_slice(s);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(acc[i] + rk[i] - ubh[i]));
    }
  }
  return worst;
}

std::vector<OrderReport> taylor_order_study(const DriftSpec& b, const DriftSpec& h, double y,
                                            double delta, std::span<const std::size_t> orders,
                                            std::span<const double> etas, double horizon,
                                            const Grid& grid, std::size_t steps,
                                            const SpectralDecomposition& dec_zero,
                                            double t_min) {
  std::size_t k_max = 0;
  for (std::size_t k : orders) {
    if (k > 3) throw std::invalid_argument("taylor_order_study: order must be <= 3");
    k_max = std::max(k_max, k);
  }
  const RemainderStack stack(b, h, y, delta, k_max, horizon, grid, steps, dec_zero, t_min);

  // One perturbed solve per eta, shared across the requested orders.
  const std::vector<double> phi = phi_delta(y, delta, dec_zero, t_min);
  const std::size_t n = grid.size();
  std::vector<std::vector<double>> finals;
  for (double eta : etas) {
    const DriftOperator op(b.plus(h, eta), grid);
    const ParabolicSolution sol = cn_solve(op, phi, nullptr, horizon, steps, steps);
    finals.emplace_back(sol.final_slice().begin(), sol.final_slice().end());
  }

  double scale = 0.0;
  for (const auto& f : finals) {
    for (double v : f) scale = std::max(scale, std::abs(v));
  }

  std::vector<OrderReport> reports;
  for (std::size_t k : orders) {
    OrderReport rep;
    rep.k = k;
    rep.threshold = static_cast<double>(k) + 0.2;
    rep.expected = static_cast<double>(k) + 1.0;
    rep.etas.assign(etas.begin(), etas.end());
    for (std::size_t ie = 0; ie < etas.size(); ++ie) {
      const double eta = etas[ie];
      double defect = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double taylor = 0.0;
        double pw = 1.0;
        for (std::size_t kk = 0; kk <= k; ++kk) {
          taylor += pw * stack.v_final(kk)[i];
          pw *= eta;
        }
        defect = std::max(defect, std::abs(finals[ie][i] - taylor));
      }
      rep.defects.push_back(defect);
    }
    const double floor = 1e-12 * std::max(scale, 1.0);
    rep.saturated = std::all_of(rep.defects.begin(), rep.defects.end(),
                                [floor](double d) { return d < floor; });
    if (rep.saturated) {
      rep.slope = std::numeric_limits<double>::quiet_NaN();
      rep.passed = true;
    } else {
      std::vector<double> lx, ly;
      for (std::size_t ie = 0; ie < etas.size(); ++ie) {
        lx.push_back(std::log(etas[ie]));
        ly.push_back(std::log(std::max(rep.defects[ie], 1e-300)));
      }
      rep.slope = least_squares_slope(lx, ly);
      rep.passed = rep.slope >= rep.threshold;
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

nlohmann::ordered_json OrderReport::to_json() const {
  return nlohmann::ordered_json{{"k", k},
                                {"etas", etas},
                                {"defects", defects},
                                {"slope", slope},
                                {"saturated", saturated},
                                {"threshold", threshold},
                                {"expected_analytic", expected},
                                {"passed", passed}};
}

}  // namespace difflan
