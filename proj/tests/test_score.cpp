#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "difflan/score.hpp"
#include "difflan/sim.hpp"

using namespace difflan;

namespace {

std::shared_ptr<SpectralDecomposition> make_dec(const DriftSpec& b, std::size_t n,
                                                std::size_t modes) {
  Grid g(n);
  InvariantDensity mu(b, g);
  GeneratorMatrix gen(b, mu, g);
  return std::make_shared<SpectralDecomposition>(gen, modes);
}

}  // namespace

TEST_CASE("zero direction gives the zero field") {
  const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 128, 24);
  const GridMatrix d = derivative_field(*dec, DriftSpec::zero(), 0.5);
  CHECK(d.max_abs() == 0.0);
  const ScoreField s(dec, DriftSpec::zero(), 0.5);
  CHECK(s.values().max_abs() == 0.0);
}

TEST_CASE("derivative field is linear in the direction") {
  const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 128, 24);
  const DriftSpec h1 = DriftSpec::sine({1.0});
  const DriftSpec h2 = DriftSpec::sine({0.0, 0.0, 1.0});
  const GridMatrix d1 = derivative_field(*dec, h1, 0.5);
  const GridMatrix d2 = derivative_field(*dec, h2, 0.5);
  const GridMatrix dsum = derivative_field(*dec, h1.scaled(0.7).plus(h2, -0.3), 0.5);
  double worst = 0.0;
  for (std::size_t i = 0; i < d1.rows(); ++i) {
    for (std::size_t j = 0; j < d1.cols(); ++j) {
      worst = std::max(worst, std::abs(dsum(i, j) - (0.7 * d1(i, j) - 0.3 * d2(i, j))));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("score field scales linearly") {
  const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 128, 24);
  const DriftSpec h = DriftSpec::sine({1.0});
  const ScoreField s1(dec, h, 0.5);
  const ScoreField s2(dec, h.scaled(2.0), 0.5);
  double worst = 0.0;
  for (std::size_t i = 0; i < 128; ++i) {
    for (std::size_t j = 0; j < 128; ++j) {
      worst = std::max(worst, std::abs(s2.values()(i, j) - 2.0 * s1.values()(i, j)));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("coupling table invariants") {
  const auto dec = make_dec(DriftSpec::sine({0.0, 1.0}), 128, 24);
  const double delta = 0.5;
  const CouplingTable table(*dec, DriftSpec::sine({1.0}), delta);
  for (std::size_t j = 0; j < table.size(); ++j) {
    for (std::size_t k = 0; k < table.size(); ++k) {
      CHECK(table.w(j, k) == table.w(k, j));
      const double bound =
          delta * std::exp(std::max(dec->eigenvalue(j), dec->eigenvalue(k)) * delta);
      CHECK(std::abs(table.w(j, k)) <= bound * (1.0 + 1e-12));
    }
    // mode 0 is constant, so nothing couples out of it
    CHECK(table.g(j, 0) == 0.0);
  }
}

TEST_CASE("conditional centering") {
  for (const DriftSpec& b : {DriftSpec::zero(), DriftSpec::sine({0.0, 1.0}),
                             DriftSpec::sine({0.5, 0.0, 0.25})}) {
    const auto dec = make_dec(b, 256, 32);
    for (const DriftSpec& h : {DriftSpec::sine({1.0}), DriftSpec::sine({0.0, 0.5})}) {
      const ScoreField s(dec, h, 0.5);
      CHECK(s.centering_defect() <= 1e-6);
    }
  }
}

TEST_CASE("closed form vs Gauss-Legendre time quadrature") {
  struct Pair {
    DriftSpec b, h;
  };
  const std::vector<Pair> pairs = {
      {DriftSpec::zero(), DriftSpec::sine({1.0})},
      {DriftSpec::sine({0.0, 1.0}), DriftSpec::sine({1.0})},
      {DriftSpec::sine({0.5, 0.0, 0.25}), DriftSpec::sine({0.0, 0.5})}};
  for (const auto& [b, h] : pairs) {
    const auto dec = make_dec(b, 512, 48);
    const GridMatrix d = derivative_field(*dec, h, 0.5);
    const GridMatrix gl = derivative_gl_oracle(*dec, h, 0.5, 32, 16);
    double worst = 0.0;
    for (std::size_t i = 0; i < gl.rows(); ++i) {
      for (std::size_t c = 0; c < gl.cols(); ++c) {
        worst = std::max(worst, std::abs(gl(i, c) - d(i, c * 16)));
      }
    }
    CHECK(worst / d.max_abs() <= 1e-6);
  }
}

TEST_CASE("finite-difference oracle at eta = 1e-3") {
  const DriftSpec b = DriftSpec::sine({0.0, 1.0});
  const DriftSpec h = DriftSpec::sine({1.0});
  const auto dec = make_dec(b, 256, 40);
  const GridMatrix d = derivative_field(*dec, h, 0.5);
  const GridMatrix fd = derivative_fd_oracle(b, h, 0.5, 1e-3, 256, 40);
  CHECK(field_relative_defect(fd, d) <= 1e-3);

  // Log-density version against the score field.
  const ScoreField s(dec, h, 0.5);
  const GridMatrix sfd = score_fd_oracle(b, h, 0.5, 1e-3, 256, 40);
  CHECK(field_relative_defect(sfd, s.values()) <= 1e-3);
  CHECK_THROWS_AS(score_fd_oracle(b, h, 0.5, 0.05, 256, 40), std::invalid_argument);
}

TEST_CASE("finite-difference oracle converges at second order in eta") {
  // Consecutive-difference order estimate: |FD(2 eta) - FD(eta)| shrinks
  // by 4 per halving once the common pipeline bias cancels.
  const DriftSpec b = DriftSpec::sine({0.0, 1.0});
  const DriftSpec h = DriftSpec::sine({2.0});
  const GridMatrix f1 = score_fd_oracle(b, h, 0.5, 1e-2, 512, 48);
  const GridMatrix f2 = score_fd_oracle(b, h, 0.5, 5e-3, 512, 48);
  const GridMatrix f3 = score_fd_oracle(b, h, 0.5, 2.5e-3, 512, 48);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < f1.rows(); ++i) {
    for (std::size_t j = 0; j < f1.cols(); ++j) {
      d1 = std::max(d1, std::abs(f1(i, j) - f2(i, j)));
      d2 = std::max(d2, std::abs(f2(i, j) - f3(i, j)));
    }
  }
  const double order = std::log2(d1 / d2);
  CHECK(order >= 1.9);
}

TEST_CASE("lan inner product") {
  const auto dec = make_dec(DriftSpec::zero(), 256, 32);
  const DriftSpec h1 = DriftSpec::sine({0.5});
  const DriftSpec h2 = DriftSpec::sine({0.0, 0.5});
  const ScoreField s1(dec, h1, 0.5);
  const ScoreField s2(dec, h2, 0.5);
  CHECK(lan_norm_squared(ScoreField(dec, DriftSpec::zero(), 0.5)) == 0.0);
  CHECK(lan_inner(s1, s2) == lan_inner(s2, s1));
  CHECK(lan_norm_squared(s1) >= 0.0);

  // Bilinearity against the summed direction.
  const ScoreField s12(dec, h1.plus(h2), 0.5);
  const double lhs = lan_norm_squared(s12);
  const double rhs = lan_norm_squared(s1) + 2.0 * lan_inner(s1, s2) + lan_norm_squared(s2);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("lan norm matches the Monte Carlo variance of the score") {
  // Empirical variance of S(X_0, X_Delta) under the stationary chain
  // against the quadrature value, 1e5 draws, three standard errors.
  const auto dec = make_dec(DriftSpec::zero(), 256, 32);
  const DriftSpec h = DriftSpec::sine({0.5});
  const double delta = 0.5;
  const ScoreField s(dec, h, delta);
  const double lan2 = lan_norm_squared(s);

  const std::size_t m = 100000;
  RngStream rng(20250801, 99);
  const HeatKernel hk(*dec, delta);
  std::vector<double> row(dec->grid().size()), cdf(dec->grid().size());
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double x0 = sample_stationary(dec->density(), rng);
    hk.row(x0, row);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      acc += std::max(row[j], 0.0);
      cdf[j] = acc;
    }
    const double u = rng.uniform() * cdf.back();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const auto cell = static_cast<std::size_t>(it - cdf.begin());
    const double lo = cell > 0 ? cdf[cell - 1] : 0.0;
    const double x1 = (static_cast<double>(cell) + (u - lo) / (cdf[cell] - lo)) /
                      static_cast<double>(row.size());
    const double v = s(x0, x1);
    sum += v;
    sum2 += v * v;
    sum4 += v * v * v * v;
  }
  const double md = static_cast<double>(m);
  const double mean = sum / md;
  const double var = sum2 / md - mean * mean;
  const double m4 = sum4 / md;
  const double se_var = std::sqrt(std::max(m4 - var * var, 0.0) / md);
  CHECK(std::abs(var - lan2) <= 3.0 * se_var);
}

TEST_CASE("score magnitude is bounded relative to the direction size") {
  double worst_ratio = 0.0;
  for (const DriftSpec& b : {DriftSpec::zero(), DriftSpec::sine({0.0, 1.0})}) {
    const auto dec = make_dec(b, 256, 32);
    for (const DriftSpec& h : {DriftSpec::sine({1.0}), DriftSpec::sine({0.0, 0.5})}) {
      const ScoreField s(dec, h, 0.5);
      worst_ratio = std::max(worst_ratio, s.values().max_abs() / h.c1_bound());
    }
  }
  // Recorded envelope for Delta = 0.5; the measured ratios sit near 0.1.
  CHECK(worst_ratio < 1.0);
}

TEST_CASE("argument validation") {
  const auto dec = make_dec(DriftSpec::zero(), 128, 16);
  CHECK_THROWS(derivative_field(*dec, DriftSpec::constant(1.0), 0.5));
  CHECK_THROWS(derivative_field(*dec, DriftSpec::sine({1.0}), 0.01));
  const auto dec2 = make_dec(DriftSpec::zero(), 128, 16);
  const ScoreField a(dec, DriftSpec::sine({1.0}), 0.5);
  const ScoreField b(dec2, DriftSpec::sine({1.0}), 0.5);
  CHECK_THROWS_AS(lan_inner(a, b), std::invalid_argument);
}
