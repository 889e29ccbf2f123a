#include "difflan/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "difflan/errors.hpp"

namespace difflan {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTruncLog = 32.2361913019;  // ln(1e14)

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

GeneratorMatrix::GeneratorMatrix(const DriftSpec& drift, const InvariantDensity& density,
                                 const Grid& grid)
    : grid_(grid), density_(density) {
  if (!(density.grid() == grid)) {
    throw ConfigError("assemble_generator: density built on a different grid");
  }
  if (!(density.drift() == drift)) {
    throw ConfigError("assemble_generator: density built for a different drift");
  }
  const std::size_t n = grid_.size();
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const auto mu = density_.values();

  face_plus_.assign(n, 0.0);
  face_minus_.assign(n, 0.0);
  sqrt_mu_.resize(n);
  for (std::size_t i = 0; i < n; ++i) sqrt_mu_[i] = std::sqrt(mu[i]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double face = sqrt_mu_[i] * sqrt_mu_[i + 1];  // geometric mean
    face_plus_[i] = face / mu[i];
    face_minus_[i + 1] = face / mu[i + 1];
  }

  sym_.diag.resize(n);
  sym_.off.resize(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    sym_.diag[i] = -(face_plus_[i] + face_minus_[i]) * n2;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    // A_{i,i+1} * sqrt(mu_i / mu_{i+1})
    sym_.off[i] = n2 * face_plus_[i] * sqrt_mu_[i] / sqrt_mu_[i + 1];
  }
}

void GeneratorMatrix::apply(std::span<const double> f, std::span<double> out) const {
  const std::size_t n = grid_.size();
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    if (i + 1 < n) v += face_plus_[i] * (f[i + 1] - f[i]);
    if (i > 0) v -= face_minus_[i] * (f[i] - f[i - 1]);
    out[i] = v * n2;
  }
}

double GeneratorMatrix::max_row_sum() const {
  const std::size_t n = grid_.size();
  std::vector<double> ones(n, 1.0), out(n);
  apply(ones, out);
  double m = 0.0;
  for (double v : out) m = std::max(m, std::abs(v));
  return m;
}

SpectralDecomposition::SpectralDecomposition(const GeneratorMatrix& generator,
                                             std::size_t mode_count)
    : drift_(generator.density().drift()),
      density_(std::make_shared<InvariantDensity>(generator.density())) {
  const std::size_t n = generator.grid().size();
  if (mode_count < 1 || mode_count > n) {
    throw std::invalid_argument("eigendecompose: mode count must be in [1, N]");
  }

  const SymmetricTridiagonal& t = generator.symmetrized();
  std::vector<double> all = ql_eigenvalues(t);
  std::sort(all.begin(), all.end(), std::greater<>());

  lambda_.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mode_count));
  // The assembly gives exact zero row sums, so 0 is an exact eigenvalue
  // with eigenfunction 1; the QL output for it only carries rounding
  // noise of order eps * ||T||.
  lambda_[0] = 0.0;

  modes_.resize(mode_count);
  modes_[0].assign(n, 1.0);

  const auto mu = density_->values();
  const auto sqmu = generator.sqrt_density();
  std::vector<std::vector<double>> raw(mode_count);
  raw[0].assign(sqmu.begin(), sqmu.end());
  {
    double nrm = 0.0;
    for (double v : raw[0]) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (double& v : raw[0]) v /= nrm;
  }

  for (std::size_t j = 1; j < mode_count; ++j) {
    std::vector<double> v = inverse_iteration(t, lambda_[j], 0x5EED0000ULL + j);
    // One modified Gram-Schmidt pass against earlier vectors keeps the
    // basis orthonormal to rounding even for close eigenvalues.
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += v[i] * raw[k][i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= dot * raw[k][i];
    }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm < 0.5) {
      throw NumericError("eigendecompose: eigenvector collapsed in orthogonalization at j=" +
                         std::to_string(j));
    }
    for (double& x : v) x /= nrm;
    raw[j] = v;

    // Back-transform and normalize in the discrete L2(mu) product.
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = v[i] / sqmu[i];
    double unrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) unrm += u[i] * u[i] * mu[i];
    unrm = std::sqrt(unrm / static_cast<double>(n));
    const double sign = u[0] > 0.0 ? 1.0 : -1.0;
    for (double& x : u) x *= sign / unrm;
    modes_[j] = std::move(u);
  }

  for (std::size_t j = 0; j + 1 < mode_count; ++j) {
    if (!(lambda_[j] > lambda_[j + 1])) {
      throw NumericError("eigendecompose: spectrum not strictly decreasing at j=" +
                         std::to_string(j));
    }
  }

  sandwich_lower_rate_ = kPi * kPi * density_->min_value() / density_->max_value();
  mode_derivs_.resize(mode_count);
}

std::span<const double> SpectralDecomposition::mode_derivative(std::size_t j) const {
  if (mode_derivs_[j].empty()) {
    mode_derivs_[j] = grid().derivative(modes_[j]);
  }
  return mode_derivs_[j];
}

std::size_t SpectralDecomposition::modes_for_time(double t) const {
  if (t <= 0.0) return grid().size() / 2;
  const double j = std::sqrt(kTruncLog / (sandwich_lower_rate_ * t));
  const auto want = static_cast<std::size_t>(std::ceil(j)) + 4;
  return std::min(grid().size() / 2, want);
}

std::vector<double> SpectralDecomposition::richardson_eigenvalues(const DriftSpec& drift,
                                                                  std::size_t n_cells,
                                                                  std::size_t count) {
  auto eigs = [&](std::size_t n) {
    Grid g(n);
    InvariantDensity mu(drift, g);
    GeneratorMatrix gen(drift, mu, g);
    std::vector<double> all = ql_eigenvalues(gen.symmetrized());
    std::sort(all.begin(), all.end(), std::greater<>());
    all[0] = 0.0;
    all.resize(count);
    return all;
  };
  const std::vector<double> coarse = eigs(n_cells);
  const std::vector<double> fine = eigs(2 * n_cells);
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    out[j] = (4.0 * fine[j] - coarse[j]) / 3.0;  // removes the O(N^-2) bias
  }
  return out;
}

DiagnosticsReport spectral_diagnostics(const SpectralDecomposition& dec) {
  if (dec.mode_count() < 2) {
    throw std::invalid_argument("spectral_diagnostics: need at least 2 modes");
  }
  const Grid& grid = dec.grid();
  const std::size_t n = grid.size();
  const auto mu = dec.density().values();

  DiagnosticsReport rep;
  rep.sandwich_low = dec.density().min_value() / dec.density().max_value();
  rep.sandwich_high = dec.density().max_value() / dec.density().min_value();

  GeneratorMatrix gen(dec.drift(), dec.density(), grid);
  std::vector<double> lu(n);

  bool ok = true;
  for (std::size_t j = 0; j < dec.mode_count(); ++j) {
    const auto u = dec.mode(j);
    gen.apply(u, lu);
    double rn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = lu[i] - dec.eigenvalue(j) * u[i];
      rn += r * r * mu[i];
    }
    rn = std::sqrt(rn / static_cast<double>(n));
    DiagnosticsReport::Row row;
    row.j = j;
    row.lambda = dec.eigenvalue(j);
    row.rayleigh_residual = rn / std::max(std::abs(dec.eigenvalue(j)), 1.0);
    row.sandwich_ratio =
        j == 0 ? 1.0
               : dec.eigenvalue(j) / (-(static_cast<double>(j * j)) * kPi * kPi);
    if (j >= 1) {
      ok = ok && row.sandwich_ratio >= rep.sandwich_low - rep.sandwich_tolerance &&
           row.sandwich_ratio <= rep.sandwich_high + rep.sandwich_tolerance;
    }
    rep.rows.push_back(row);
  }

  double orth = 0.0;
  for (std::size_t a = 0; a < dec.mode_count(); ++a) {
    for (std::size_t b = a; b < dec.mode_count(); ++b) {
      const double dot = grid.inner(dec.mode(a), dec.mode(b), mu);
      orth = std::max(orth, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  rep.orthonormality_defect = orth;

  double u0d = 0.0;
  for (double v : dec.mode(0)) u0d = std::max(u0d, std::abs(v - 1.0));
  rep.u0_defect = u0d;
  rep.lambda0_abs = std::abs(dec.eigenvalue(0));

  rep.passed = ok && orth <= 1e-9 && u0d <= 1e-7 && rep.lambda0_abs <= 1e-9;
  return rep;
}

nlohmann::ordered_json DiagnosticsReport::to_json() const {
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const Row& r : rows) {
    rows_json.push_back({{"j", r.j},
                         {"lambda", r.lambda},
                         {"rayleigh_residual", r.rayleigh_residual},
                         {"sandwich_ratio", r.sandwich_ratio}});
  }
  return nlohmann::ordered_json{{"rows", rows_json},
                                {"orthonormality_defect", orthonormality_defect},
                                {"u0_defect", u0_defect},
                                {"lambda0_abs", lambda0_abs},
                                {"sandwich_window", {sandwich_low, sandwich_high}},
                                {"sandwich_tolerance", sandwich_tolerance},
                                {"passed", passed}};
}

std::string DiagnosticsReport::to_csv() const {
  std::ostringstream os;
  os << "j,lambda,rayleigh_residual,sandwich_ratio\n";
  char buf[128];
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", r.j, r.lambda,
                  r.rayleigh_residual, r.sandwich_ratio);
    os << buf;
  }
  return os.str();
}

GrowthReport sobolev_growth_check(const SpectralDecomposition& dec) {
  if (dec.mode_count() < 8) {
    throw std::invalid_argument("sobolev_growth_check: need at least 8 modes");
  }
  const Grid& grid = dec.grid();
  const std::size_t j_lo = 4;
  const std::size_t j_hi = dec.mode_count() / 2;

  std::vector<double> logs_lam, logs_h1, logs_h2;
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    const auto u = dec.mode(j);
    const std::vector<double> du = grid.derivative(u);
    const std::vector<double> ddu = grid.derivative(du);
    const double l2 = grid.inner(u, u);
    const double h1 = std::sqrt(l2 + grid.inner(du, du));
    const double h2 = std::sqrt(l2 + grid.inner(ddu, ddu));
    logs_lam.push_back(std::log(std::abs(dec.eigenvalue(j))));
    logs_h1.push_back(std::log(h1));
    logs_h2.push_back(std::log(h2));
  }

  GrowthReport rep;
  rep.j_lo = j_lo;
  rep.j_hi = j_hi;
  rep.slope_h1 = fit_slope(logs_lam, logs_h1);
  rep.slope_h2 = fit_slope(logs_lam, logs_h2);
  rep.passed = rep.slope_h1 <= 0.5 + 0.1 && rep.slope_h2 <= 1.0 + 0.1;
  return rep;
}

nlohmann::ordered_json GrowthReport::to_json() const {
  return nlohmann::ordered_json{{"slope_h1", slope_h1},
                                {"slope_h2", slope_h2},
                                {"j_range", {j_lo, j_hi}},
                                {"passed", passed}};
}

}  // namespace difflan
