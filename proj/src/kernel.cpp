#include "difflan/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "difflan/errors.hpp"

namespace difflan {

HeatKernel::HeatKernel(const SpectralDecomposition& dec, double t, double t_min)
    : dec_(dec), t_(t) {
  if (!(t >= t_min)) {
    throw std::invalid_argument(
        "HeatKernel: t=" + std::to_string(t) + " below t_min=" + std::to_string(t_min) +
        "; the truncated series is too singular for this grid");
  }
  const std::size_t want = dec.modes_for_time(t);
  if (dec.mode_count() < want) {
    // Acceptable only if the truncated weight is already negligible.
    const double first_truncated =
        std::exp(-dec.sandwich_lower_rate() * static_cast<double>(dec.mode_count()) *
                 static_cast<double>(dec.mode_count()) * t);
    if (first_truncated >= 1e-14) {
      throw std::invalid_argument("HeatKernel: decomposition carries " +
                                  std::to_string(dec.mode_count()) + " modes but " +
                                  std::to_string(want) + " are needed at t=" + std::to_string(t));
    }
  }
  weights_.reserve(dec.mode_count());
  for (std::size_t j = 0; j < dec.mode_count(); ++j) {
    const double w = std::exp(dec.eigenvalue(j) * t);
    if (j > 0 && w < 1e-14) break;
    weights_.push_back(w);
  }
}

double HeatKernel::operator()(double x, double y) const {
  const Grid& grid = dec_.grid();
  const auto lx = grid.locate(x);
  const auto ly = grid.locate(y);
  double s = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const auto u = dec_.mode(j);
    const double ux = u[lx.cell] * (1.0 - lx.frac) + u[lx.cell + 1] * lx.frac;
    const double uy = u[ly.cell] * (1.0 - ly.frac) + u[ly.cell + 1] * ly.frac;
    s += weights_[j] * ux * uy;
  }
  const auto mu = dec_.density().values();
  const double muy = mu[ly.cell] * (1.0 - ly.frac) + mu[ly.cell + 1] * ly.frac;
  const double p = s * muy;
  if (!(p > 0.0)) {
    throw NumericError("transition_density: non-positive value p=" + std::to_string(p) +
                       " at (x,y)=(" + std::to_string(x) + "," + std::to_string(y) +
                       "), t=" + std::to_string(t_));
  }
  return p;
}

double HeatKernel::d1(double x, double y) const {
  const Grid& grid = dec_.grid();
  const auto lx = grid.locate(x);
  const auto ly = grid.locate(y);
  double s = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const auto du = dec_.mode_derivative(j);
    const auto u = dec_.mode(j);
    const double dux = du[lx.cell] * (1.0 - lx.frac) + du[lx.cell + 1] * lx.frac;
    const double uy = u[ly.cell] * (1.0 - ly.frac) + u[ly.cell + 1] * ly.frac;
    s += weights_[j] * dux * uy;
  }
  const auto mu = dec_.density().values();
  const double muy = mu[ly.cell] * (1.0 - ly.frac) + mu[ly.cell + 1] * ly.frac;
  return s * muy;
}

void HeatKernel::row(double x, std::span<double> out) const {
  const Grid& grid = dec_.grid();
  const std::size_t n = grid.size();
  const auto lx = grid.locate(x);
  const auto mu = dec_.density().values();
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const auto u = dec_.mode(j);
    const double c = weights_[j] * (u[lx.cell] * (1.0 - lx.frac) + u[lx.cell + 1] * lx.frac);
    for (std::size_t i = 0; i < n; ++i) out[i] += c * u[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] *= mu[i];
}

GridMatrix HeatKernel::matrix() const {
  const std::size_t n = dec_.grid().size();
  const auto mu = dec_.density().values();
  GridMatrix p(n, n, 0.0);
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const auto u = dec_.mode(j);
    const double w = weights_[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double c = w * u[i];
      double* prow = &p(i, 0);
      for (std::size_t k = 0; k < n; ++k) prow[k] += c * u[k];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double* prow = &p(i, 0);
    for (std::size_t k = 0; k < n; ++k) prow[k] *= mu[k];
  }
  return p;
}

std::vector<double> semigroup_apply(const SpectralDecomposition& dec, double t,
                                    std::span<const double> f) {
  if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be nonnegative");
  const Grid& grid = dec.grid();
  const std::size_t n = grid.size();
  const auto mu = dec.density().values();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < dec.mode_count(); ++j) {
    const auto u = dec.mode(j);
    const double coef = grid.inner(f, u, mu) * std::exp(dec.eigenvalue(j) * t);
    if (coef == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += coef * u[i];
  }
  return out;
}

IdentityReport kernel_identity_checks(const SpectralDecomposition& dec,
                                      std::span<const double> times, double t_min) {
  const Grid& grid = dec.grid();
  const std::size_t n = grid.size();
  const auto mu = dec.density().values();

  IdentityReport rep;
  bool ok = true;
  for (double t : times) {
    const HeatKernel hk(dec, t, t_min);
    const GridMatrix p = hk.matrix();
    const HeatKernel hk2(dec, 2.0 * t, t_min);
    const GridMatrix p2 = hk2.matrix();

    IdentityReport::Row row;
    row.t = t;
    row.min_p = p(0, 0);
    row.max_p = p(0, 0);
    double mass = 0.0, bal = 0.0, ck = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mass = std::max(mass, std::abs(grid.integrate(p.row(i)) - 1.0));
      for (std::size_t j = 0; j < n; ++j) {
        const double v = p(i, j);
        row.min_p = std::min(row.min_p, v);
        row.max_p = std::max(row.max_p, v);
        bal = std::max(bal, std::abs(mu[i] * v - mu[j] * p(j, i)));
      }
    }
    // Chapman-Kolmogorov on a coarse probe set; the identity is linear
    // algebra over identical mode sums, so a subgrid is representative.
    const std::size_t stride = std::max<std::size_t>(1, n / 32);
    std::vector<double> conv(n);
    for (std::size_t i = 0; i < n; i += stride) {
      for (std::size_t j = 0; j < n; j += stride) {
        double s = 0.0;
        for (std::size_t z = 0; z < n; ++z) s += p(i, z) * p(z, j);
        ck = std::max(ck, std::abs(s / static_cast<double>(n) - p2(i, j)));
      }
    }
    row.mass_defect = mass;
    row.detailed_balance_defect = bal;
    row.chapman_defect = ck;
    ok = ok && mass < rep.threshold && bal < rep.threshold && ck < rep.threshold &&
         row.min_p > 0.0;
    rep.rows.push_back(row);
  }
  rep.passed = ok;
  return rep;
}

nlohmann::ordered_json IdentityReport::to_json() const {
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const Row& r : rows) {
    rows_json.push_back({{"t", r.t},
                         {"mass_defect", r.mass_defect},
                         {"detailed_balance_defect", r.detailed_balance_defect},
                         {"chapman_defect", r.chapman_defect},
                         {"min_p", r.min_p},
                         {"max_p", r.max_p}});
  }
  return nlohmann::ordered_json{
      {"rows", rows_json}, {"threshold", threshold}, {"passed", passed}};
}

}  // namespace difflan
