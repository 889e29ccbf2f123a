#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "difflan/kernel.hpp"
#include "difflan/model.hpp"
#include "difflan/spectral.hpp"

namespace difflan {

/// Counter-based random stream: output i of stream s under seed k is a
/// fixed mixing of (k, s, i). Identical (seed, stream) pairs reproduce
/// identical draws; distinct stream indices give statistically
/// independent streams, so parallel replicates need no shared state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal (Box-Muller; draws two uniforms per pair).
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> cached_normal_;
};

/// Observed chain skeleton (X_0, X_Delta, ..., X_{n Delta}) plus
/// generation metadata.
struct LowFreqSample {
  std::vector<double> states;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string method;  // "euler" or "exact"
  double dt = 0.0;     // internal Euler step when method == "euler"

  std::size_t transitions() const { return states.empty() ? 0 : states.size() - 1; }

  std::string to_csv() const;
  nlohmann::ordered_json metadata_json() const;
};

/// Draw from the stationary density by inverse CDF over the grid cells
/// with within-cell linear interpolation.
double sample_stationary(const InvariantDensity& density, RngStream& rng);

/// Euler-Maruyama path of the reflected diffusion: drift step plus
/// sqrt(2 dt) noise, folded back into [0,1] by repeated reflection at
/// the endpoints. Returns the path at every step (size T/dt + 1).
std::vector<double> simulate_reflected(const DriftSpec& drift, double x0, double horizon,
                                       double dt, RngStream& rng);

/// Every (Delta/dt)-th state of an Euler path; Delta must be an integer
/// multiple of dt.
LowFreqSample subsample(const std::vector<double>& path, double dt, double delta);

/// Exact low-frequency skeleton: stationary start, then inverse-CDF
/// draws from the spectral transition rows. No time-discretization bias.
LowFreqSample exact_skeleton_sample(const SpectralDecomposition& dec, double delta,
                                    std::size_t n, RngStream& rng, double t_min = kDefaultTMin);

/// Occupation chi-square of a path against the stationary density over
/// `bins` cells, subsampled every `spacing` time units so the retained
/// points are effectively independent.
struct OccupationCheck {
  double statistic = 0.0;
  double critical_99 = 0.0;
  std::size_t samples = 0;
  bool passed = false;

  nlohmann::ordered_json to_json() const;
};

OccupationCheck occupation_chi_square(const std::vector<double>& path, double dt,
                                      const InvariantDensity& density, std::size_t bins = 32,
                                      double spacing = 0.5);

/// One-sample Kolmogorov-Smirnov distance against the grid CDF of mu.
double ks_distance_to_density(std::vector<double> draws, const InvariantDensity& density);

}  // namespace difflan
