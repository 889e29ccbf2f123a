#include "difflan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "difflan/errors.hpp"

namespace difflan {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Inverse CDF over midpoint cell masses with within-cell linear
// interpolation. cdf[i] is the mass of cells 0..i; cdf.back() ~ 1.
double invert_cell_cdf(std::span<const double> cdf, double u, std::size_t n) {
  const double target = u * cdf[n - 1];
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
  const std::size_t j = static_cast<std::size_t>(it - cdf.begin());
  const double lo = j > 0 ? cdf[j - 1] : 0.0;
  const double mass = cdf[j] - lo;
  const double frac = mass > 0.0 ? (target - lo) / mass : 0.5;
  return (static_cast<double>(j) + frac) / static_cast<double>(n);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  key_ = mix64(seed ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

std::uint64_t RngStream::next_u64() { return mix64(key_ ^ mix64(++counter_ * 0xA0761D6478BD642FULL)); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (cached_normal_) {
    const double v = *cached_normal_;
    cached_normal_.reset();
    return v;
  }
  // Box-Muller on (0,1] x [0,1).
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(a);
  return r * std::cos(a);
}

std::string LowFreqSample::to_csv() const {
  std::ostringstream os;
  char buf[40];
  for (double s : states) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", s);
    os << buf;
  }
  return os.str();
}

nlohmann::ordered_json LowFreqSample::metadata_json() const {
  nlohmann::ordered_json j{{"states", states.size()},
                           {"delta", delta},
                           {"seed", seed},
                           {"stream", stream},
                           {"method", method}};
  if (method == "euler") j["dt"] = dt;
  return j;
}

double sample_stationary(const InvariantDensity& density, RngStream& rng) {
  const std::size_t n = density.grid().size();
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += density.value(i);
    cdf[i] = acc;
  }
  return invert_cell_cdf(cdf, rng.uniform(), n);
}

std::vector<double> simulate_reflected(const DriftSpec& drift, double x0, double horizon,
                                       double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_reflected: dt must be positive");
  if (dt > 1e-3) throw std::invalid_argument("simulate_reflected: dt must be <= 1e-3");
  if (!(x0 >= 0.0 && x0 <= 1.0)) {
    throw std::invalid_argument("simulate_reflected: x0 outside [0,1]");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<double> path;
  path.reserve(steps + 1);
  double x = x0;
  path.push_back(x);
  const double noise = std::sqrt(2.0 * dt);
  for (std::size_t m = 0; m < steps; ++m) {
    x += drift(x) * dt + noise * rng.normal();
    // fold back into [0,1]
    while (x < 0.0 || x > 1.0) {
      if (x < 0.0) x = -x;
      if (x > 1.0) x = 2.0 - x;
    }
    path.push_back(x);
  }
  return path;
}

LowFreqSample subsample(const std::vector<double>& path, double dt, double delta) {
  const double ratio = delta / dt;
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
    throw std::invalid_argument("subsample: Delta must be an integer multiple of dt");
  }
  if (path.empty()) throw std::invalid_argument("subsample: empty path");
  LowFreqSample out;
  out.delta = delta;
  out.dt = dt;
  out.method = "euler";
  for (std::size_t i = 0; i < path.size(); i += stride) out.states.push_back(path[i]);
  return out;
}

LowFreqSample exact_skeleton_sample(const SpectralDecomposition& dec, double delta,
                                    std::size_t n, RngStream& rng, double t_min) {
  const HeatKernel hk(dec, delta, t_min);
  const std::size_t cells = dec.grid().size();
  LowFreqSample out;
  out.delta = delta;
  out.method = "exact";
  out.seed = rng.seed();
  out.stream = rng.stream();
  out.states.reserve(n + 1);

  double x = sample_stationary(dec.density(), rng);
  out.states.push_back(x);
  std::vector<double> row(cells), cdf(cells);
  for (std::size_t i = 0; i < n; ++i) {
    hk.row(x, row);
    double acc = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
      acc += std::max(row[j], 0.0);
      cdf[j] = acc;
    }
    x = invert_cell_cdf(cdf, rng.uniform(), cells);
    out.states.push_back(x);
  }
  return out;
}

OccupationCheck occupation_chi_square(const std::vector<double>& path, double dt,
                                      const InvariantDensity& density, std::size_t bins,
                                      double spacing) {
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spacing / dt)));
  std::vector<double> counts(bins, 0.0);
  std::size_t total = 0;
  for (std::size_t i = stride; i < path.size(); i += stride) {
    auto bin = static_cast<std::size_t>(path[i] * static_cast<double>(bins));
    bin = std::min(bin, bins - 1);
    counts[bin] += 1.0;
    ++total;
  }

  const Grid& grid = density.grid();
  const std::size_t n = grid.size();
  const std::size_t per = n / bins;
  OccupationCheck chk;
  chk.samples = total;
  for (std::size_t b = 0; b < bins; ++b) {
    double mass = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) mass += density.value(i);
    mass /= static_cast<double>(n);
    const double expected = mass * static_cast<double>(total);
    const double diff = counts[b] - expected;
    chk.statistic += diff * diff / expected;
  }
  // chi-square 99th percentile at bins-1 degrees of freedom via the
  // Wilson-Hilferty cube approximation.
  const double k = static_cast<double>(bins - 1);
  const double z = 2.3263478740408408;  // Phi^{-1}(0.99)
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  chk.critical_99 = k * t * t * t;
  chk.passed = chk.statistic < chk.critical_99;
  return chk;
}

nlohmann::ordered_json OccupationCheck::to_json() const {
  return nlohmann::ordered_json{{"statistic", statistic},
                                {"critical_99", critical_99},
                                {"samples", samples},
                                {"passed", passed}};
}

double ks_distance_to_density(std::vector<double> draws, const InvariantDensity& density) {
  std::sort(draws.begin(), draws.end());
  const Grid& grid = density.grid();
  const std::size_t n = grid.size();
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += density.value(i) / static_cast<double>(n);
    cdf[i] = acc;
  }
  const double m = static_cast<double>(draws.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    // piecewise-linear CDF over cells
    const double x = draws[i];
    const double t = x * static_cast<double>(n);
    const auto cell = std::min(static_cast<std::size_t>(t), n - 1);
    const double lo = cell > 0 ? cdf[cell - 1] : 0.0;
    const double f = lo + (cdf[cell] - lo) * (t - static_cast<double>(cell));
    worst = std::max(worst, std::abs(f - static_cast<double>(i + 1) / m));
    worst = std::max(worst, std::abs(f - static_cast<double>(i) / m));
  }
  return worst;
}

}  // namespace difflan
