#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "difflan/score.hpp"
#include "difflan/sim.hpp"

namespace difflan {

/// Exact log-likelihood of a low-frequency sample under the drift the
/// decomposition was built for: log mu(X_0) plus the sum of log
/// transition densities along the chain.
double log_likelihood(const SpectralDecomposition& dec, const InvariantDensity& density,
                      const LowFreqSample& sample, double t_min = kDefaultTMin);

struct LanReplicate {
  double loglik_ratio = 0.0;
  double score_term = 0.0;  // score_sum / sqrt(n)
  double remainder = 0.0;   // loglik_ratio - score_term + lan_norm^2 / 2
};

/// One LAN verification run at a fixed chain length.
struct LanReport {
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  double lan_norm2 = 0.0;
  std::vector<LanReplicate> records;
  double median_abs_remainder = 0.0;
  double mean_abs_remainder = 0.0;
  double mean_score = 0.0;
  double score_variance = 0.0;

  nlohmann::ordered_json to_json() const;
  std::string records_csv() const;
};

struct LanExperimentConfig {
  std::size_t grid_cells = 512;
  std::size_t modes = 48;
  double delta = 0.5;
  double t_min = kDefaultTMin;
  double theta_radius = 10.0;
  unsigned threads = 0;  // 0: resolve from env/hardware
};

/// Runs the likelihood-ratio experiment for each chain length in
/// `n_list`: per replicate an exact skeleton under the base drift, the
/// exact log-likelihood ratio against the drift perturbed by h/sqrt(n)
/// (fresh spectral pipeline per n), the score sum, and the remainder.
/// Both drifts must be sine series inside the admissible ball.
std::vector<LanReport> lan_experiment(const DriftSpec& b, const DriftSpec& h, double delta,
                                      const std::vector<std::size_t>& n_list,
                                      std::size_t replicates, std::uint64_t seed,
                                      const LanExperimentConfig& config = {});

/// Distribution check of the standardized score sums against N(0,1):
/// Kolmogorov-Smirnov at the 99% level plus the empirical-variance to
/// lan_norm^2 ratio.
struct CltReport {
  std::string status;  // "ok", "zero direction", "too few replicates"
  double ks_distance = 0.0;
  double ks_critical = 0.0;
  double variance_ratio = 0.0;
  bool passed = false;

  nlohmann::ordered_json to_json() const;
};

CltReport clt_check(const LanReport& report);

/// Initial-density term log mu_{b + h/sqrt(n)}(x0) - log mu_b(x0),
/// evaluated analytically; decays like n^{-1/2}.
double invariant_start_term(const DriftSpec& b, const DriftSpec& h, double n, double x0,
                            const Grid& grid);

}  // namespace difflan
