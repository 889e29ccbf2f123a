#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "difflan/kernel.hpp"
#include "difflan/sim.hpp"
#include "difflan/spectral.hpp"

using namespace difflan;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralDecomposition make_dec(const DriftSpec& b, std::size_t n, std::size_t modes) {
  Grid g(n);
  InvariantDensity mu(b, g);
  GeneratorMatrix gen(b, mu, g);
  return SpectralDecomposition(gen, modes);
}

// Drift-free kernel by its cosine series, summed to machine precision.
double cosine_series_kernel(double t, double x, double y) {
  double p = 1.0;
  for (int m = 1; m < 200; ++m) {
    const double w = std::exp(-static_cast<double>(m) * static_cast<double>(m) * kPi * kPi * t);
    if (w < 1e-18) break;
    p += 2.0 * w * std::cos(m * kPi * x) * std::cos(m * kPi * y);
  }
  return p;
}

}  // namespace

TEST_CASE("kernel refuses too-short times") {
  const auto dec = make_dec(DriftSpec::zero(), 64, 16);
  CHECK_THROWS_AS(HeatKernel(dec, 0.01), std::invalid_argument);
  CHECK_NOTHROW(HeatKernel(dec, 0.05));
}

TEST_CASE("kernel weight invariants") {
  const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 128, 32);
  for (double t : {0.05, 0.25, 1.0}) {
    const HeatKernel hk(dec, t);
    const auto w = hk.weights();
    CHECK(w[0] == 1.0);
    for (double v : w) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
    // first truncated weight below 1e-14
    if (hk.active_modes() < dec.mode_count()) {
      CHECK(std::exp(dec.eigenvalue(hk.active_modes()) * t) < 1e-14);
    }
  }
}

TEST_CASE("long-time kernel equilibrates to the invariant density") {
  const auto dec = make_dec(DriftSpec::zero(), 128, 16);
  const HeatKernel hk(dec, 10.0);
  for (double x : {0.1, 0.5, 0.9}) {
    for (double y : {0.2, 0.5, 0.8}) {
      CHECK(hk(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("drift-free kernel matches the cosine series oracle") {
  const auto dec = make_dec(DriftSpec::zero(), 512, 64);
  const HeatKernel hk(dec, 0.1);
  const double oracle = cosine_series_kernel(0.1, 0.5, 0.5);
  CHECK(oracle == doctest::Approx(1.0386).epsilon(1e-4));
  CHECK(hk(0.5, 0.5) == doctest::Approx(oracle).epsilon(1e-4));
  // off the diagonal too
  CHECK(hk(0.25, 0.75) ==
        doctest::Approx(cosine_series_kernel(0.1, 0.25, 0.75)).epsilon(1e-4));
}

TEST_CASE("mass conservation at sampling times") {
  for (const DriftSpec& b : {DriftSpec::zero(), DriftSpec::sine({0.0, 1.0}),
                             DriftSpec::sine({0.5, 0.0, 0.25}), DriftSpec::constant(1.0)}) {
    const auto dec = make_dec(b, 256, 48);
    const HeatKernel hk(dec, 0.5);
    const GridMatrix p = hk.matrix();
    for (std::size_t i = 0; i < 256; i += 17) {
      CHECK(std::abs(dec.grid().integrate(p.row(i)) - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("derivative kernel") {
  const auto dec = make_dec(DriftSpec::zero(), 512, 48);
  const HeatKernel hk(dec, 0.25);

  SUBCASE("vanishes at matched midpoints by symmetry") {
    CHECK(std::abs(hk.d1(0.5, 0.5)) < 1e-10);
  }
  SUBCASE("near zero at the reflecting boundary") {
    for (double y : {0.2, 0.5, 0.8}) {
      CHECK(std::abs(hk.d1(0.0, y)) < 0.01);
    }
  }
  SUBCASE("agrees with central differences of the density") {
    const Grid& g = dec.grid();
    const double q = 0.25 / 512.0;  // quarter-cell step
    double sup = 0.0;
    for (std::size_t i = 64; i < 448; i += 37) {
      for (std::size_t j = 64; j < 448; j += 41) {
        sup = std::max(sup, std::abs(hk.d1(g.node(i), g.node(j))));
      }
    }
    for (std::size_t i = 64; i < 448; i += 37) {
      for (std::size_t j = 64; j < 448; j += 41) {
        const double x = g.node(i), y = g.node(j);
        const double fd = (hk(x + q, y) - hk(x - q, y)) / (2.0 * q);
        CHECK(std::abs(fd - hk.d1(x, y)) <= 1e-3 * sup);
        // also at the inter-node midpoint
        const double xm = x + 0.5 / 512.0;
        const double fdm = (hk(xm + q, y) - hk(xm - q, y)) / (2.0 * q);
        CHECK(std::abs(fdm - hk.d1(xm, y)) <= 1e-3 * sup);
      }
    }
  }
}

TEST_CASE("semigroup action") {
  const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 256, 48);
  const Grid& g = dec.grid();
  const auto mu = dec.density().values();

  SUBCASE("constants are invariant") {
    const std::vector<double> ones(g.size(), 1.0);
    const auto out = semigroup_apply(dec, 0.7, ones);
    for (double v : out) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("long-time limit is the mean") {
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::cos(3.0 * g.node(i)) + 0.2;
    const double mean = g.inner(f, std::vector<double>(g.size(), 1.0), mu);
    const auto out = semigroup_apply(dec, 50.0, f);
    for (double v : out) CHECK(v == doctest::Approx(mean).epsilon(1e-10));
  }
  SUBCASE("L2(mu) contraction") {
    RngStream rng(11, 3);
    std::vector<double> f(g.size());
    for (double& v : f) v = rng.uniform() - 0.5;
    const double nf = g.norm(f, mu);
    for (double t : {0.01, 0.1, 1.0}) {
      const auto out = semigroup_apply(dec, t, f);
      CHECK(g.norm(out, mu) <= nf * (1.0 + 1e-12));
    }
    // t = 0 reproduces the mode-span projection, which never expands.
    const auto proj = semigroup_apply(dec, 0.0, f);
    CHECK(g.norm(proj, mu) <= nf * (1.0 + 1e-12));
  }
}

TEST_CASE("kernel identity checks") {
  SUBCASE("zero drift at N=512") {
    const auto dec = make_dec(DriftSpec::zero(), 512, 48);
    const std::vector<double> times{0.25};
    const auto rep = kernel_identity_checks(dec, times);
    CHECK(rep.passed);
    CHECK(rep.rows[0].mass_defect < 1e-10);
    CHECK(rep.rows[0].detailed_balance_defect < 1e-10);
    CHECK(rep.rows[0].chapman_defect < 1e-10);
  }
  SUBCASE("sine drift regression levels") {
    const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 1024, 48);
    const std::vector<double> times{0.25};
    const auto rep = kernel_identity_checks(dec, times);
    CHECK(rep.passed);
    CHECK(rep.rows[0].mass_defect < 1e-8);
    CHECK(rep.rows[0].detailed_balance_defect < 1e-8);
    CHECK(rep.rows[0].chapman_defect < 1e-8);
  }
}

TEST_CASE("two-sided bounds tighten with time") {
  const auto dec = make_dec(DriftSpec::sine({0.5, 0.0, 0.25}), 256, 48);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const auto rep = kernel_identity_checks(dec, times);
  for (const auto& row : rep.rows) {
    CHECK(row.min_p > 0.0);
    CHECK(std::isfinite(row.max_p));
  }
  CHECK(rep.rows[0].max_p >= rep.rows[1].max_p);
  CHECK(rep.rows[1].max_p >= rep.rows[2].max_p);
  CHECK(rep.rows[0].min_p <= rep.rows[1].min_p);
  CHECK(rep.rows[1].min_p <= rep.rows[2].min_p);
}

TEST_CASE("short-time sup stays within the t^{-1/2} envelope") {
  const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 512, 128);
  std::vector<double> scaled;
  for (double t : {0.05, 0.1, 0.2, 0.4}) {
    const HeatKernel hk(dec, t);
    const GridMatrix p = hk.matrix();
    scaled.push_back(p.max_abs() * std::sqrt(t));
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  CHECK(*hi / *lo < 1.6);
}

TEST_CASE("truncation stability") {
  const DriftSpec b = DriftSpec::sine({0.0, 1.0});
  const auto dec1 = make_dec(b, 256, 24);
  const auto dec2 = make_dec(b, 256, 48);
  const HeatKernel h1(dec1, 0.5);
  const HeatKernel h2(dec2, 0.5);
  double worst = 0.0;
  for (double x : {0.12, 0.4, 0.83}) {
    for (double y : {0.2, 0.55, 0.95}) {
      worst = std::max(worst, std::abs(h1(x, y) - h2(x, y)));
    }
  }
  CHECK(worst < 1e-12);
}
