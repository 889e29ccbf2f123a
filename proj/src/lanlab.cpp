#include "difflan/lanlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "difflan/errors.hpp"
#include "difflan/util.hpp"

namespace difflan {

double log_likelihood(const SpectralDecomposition& dec, const InvariantDensity& density,
                      const LowFreqSample& sample, double t_min) {
  if (sample.states.empty()) {
    throw std::invalid_argument("log_likelihood: empty sample");
  }
  double ll = density.log_value_at(sample.states.front());
  if (sample.transitions() == 0) return ll;
  const HeatKernel hk(dec, sample.delta, t_min);
  for (std::size_t i = 1; i < sample.states.size(); ++i) {
    ll += std::log(hk(sample.states[i - 1], sample.states[i]));
  }
  return ll;
}

namespace {

struct Pipeline {
  std::shared_ptr<InvariantDensity> density;
  std::shared_ptr<SpectralDecomposition> dec;

  Pipeline(const DriftSpec& drift, const Grid& grid, std::size_t modes) {
    density = std::make_shared<InvariantDensity>(drift, grid);
    GeneratorMatrix gen(drift, *density, grid);
    dec = std::make_shared<SpectralDecomposition>(gen, modes);
  }
};

double median_abs(std::vector<double> values) {
  for (double& v : values) v = std::abs(v);
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m == 0) return 0.0;
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

std::vector<LanReport> lan_experiment(const DriftSpec& b, const DriftSpec& h, double delta,
                                      const std::vector<std::size_t>& n_list,
                                      std::size_t replicates, std::uint64_t seed,
                                      const LanExperimentConfig& config) {
  if (!b.is_sine() || !h.is_sine()) {
    throw ConfigError("lan_experiment: drifts must be sine series (constant drift is "
                      "admitted for oracle tests only)");
  }
  if (b.c1_bound() > config.theta_radius) {
    throw ConfigError("lan_experiment: base drift outside the admissible ball");
  }
  const Grid grid(config.grid_cells);
  const Pipeline base(b, grid, config.modes);
  const auto base_dec = base.dec;

  // Score field and LAN norm are shared across chain lengths.
  const ScoreField score(base_dec, h, delta, config.t_min);
  const double lan2 = lan_norm_squared(score);
  const unsigned threads = resolve_threads(config.threads);

  std::vector<LanReport> reports;
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const std::size_t n = n_list[ni];
    if (n < 1) throw std::invalid_argument("lan_experiment: n must be >= 1");
    const double root_n = std::sqrt(static_cast<double>(n));
    const DriftSpec perturbed = b.plus(h, 1.0 / root_n);
    if (perturbed.c1_bound() > config.theta_radius) {
      throw ConfigError("lan_experiment: perturbed drift outside the admissible ball");
    }
    // One perturbed pipeline per n, reused by every replicate.
    const Pipeline pert(perturbed, grid, config.modes);

    LanReport rep;
    rep.n = n;
    rep.replicates = replicates;
    rep.seed = seed;
    rep.lan_norm2 = lan2;
    rep.records.resize(replicates);

    parallel_for(replicates, threads, [&](std::size_t r) {
      RngStream rng(seed, (static_cast<std::uint64_t>(ni) << 32) | r);
      const LowFreqSample sample =
          exact_skeleton_sample(*base_dec, delta, n, rng, config.t_min);
      const double ll_base = log_likelihood(*base_dec, *base.density, sample, config.t_min);
      const double ll_pert = log_likelihood(*pert.dec, *pert.density, sample, config.t_min);
      double score_sum = 0.0;
      for (std::size_t i = 1; i < sample.states.size(); ++i) {
        score_sum += score(sample.states[i - 1], sample.states[i]);
      }
      LanReplicate& rec = rep.records[r];
      rec.loglik_ratio = ll_pert - ll_base;
      rec.score_term = score_sum / root_n;
      rec.remainder = rec.loglik_ratio - rec.score_term + 0.5 * lan2;
    });

    std::vector<double> rems, scores;
    rems.reserve(replicates);
    scores.reserve(replicates);
    for (const LanReplicate& rec : rep.records) {
      rems.push_back(rec.remainder);
      scores.push_back(rec.score_term);
    }
    rep.median_abs_remainder = median_abs(rems);
    double mean_abs = 0.0, mean_score = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      mean_abs += std::abs(rems[r]);
      mean_score += scores[r];
    }
    mean_abs /= static_cast<double>(replicates);
    mean_score /= static_cast<double>(replicates);
    double var = 0.0;
    for (double s : scores) var += (s - mean_score) * (s - mean_score);
    var /= static_cast<double>(replicates > 1 ? replicates - 1 : 1);
    rep.mean_abs_remainder = mean_abs;
    rep.mean_score = mean_score;
    rep.score_variance = var;
    reports.push_back(std::move(rep));
  }
  return reports;
}

nlohmann::ordered_json LanReport::to_json() const {
  return nlohmann::ordered_json{{"n", n},
                                {"replicates", replicates},
                                {"seed", seed},
                                {"lan_norm2", lan_norm2},
                                {"median_abs_remainder", median_abs_remainder},
                                {"mean_abs_remainder", mean_abs_remainder},
                                {"mean_score", mean_score},
                                {"score_variance", score_variance}};
}

std::string LanReport::records_csv() const {
  std::ostringstream os;
  os << "loglik_ratio,score_term,remainder\n";
  char buf[144];
  for (const LanReplicate& r : records) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.loglik_ratio, r.score_term,
                  r.remainder);
    os << buf;
  }
  return os.str();
}

CltReport clt_check(const LanReport& report) {
  CltReport out;
  out.ks_critical = 1.63 / std::sqrt(static_cast<double>(report.replicates));
  bool all_zero = true;
  for (const LanReplicate& r : report.records) {
    if (r.score_term != 0.0) {
      all_zero = false;
      break;
    }
  }
  if (report.lan_norm2 <= 0.0) {
    if (!all_zero) {
      throw NumericError("clt_check: nonzero scores with zero lan norm");
    }
    out.status = "zero direction";
    out.passed = true;
    return out;
  }
  if (report.replicates < 500) {
    out.status = "too few replicates";
    out.passed = false;
    return out;
  }

  std::vector<double> z;
  z.reserve(report.replicates);
  const double sd = std::sqrt(report.lan_norm2);
  for (const LanReplicate& r : report.records) z.push_back(r.score_term / sd);
  std::sort(z.begin(), z.end());
  const double m = static_cast<double>(z.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = 0.5 * std::erfc(-z[i] / std::numbers::sqrt2);
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / m));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / m));
  }
  out.ks_distance = ks;

  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= m;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= (m - 1.0);
  out.variance_ratio = var;  // z already standardized by lan_norm

  out.passed = ks < out.ks_critical && out.variance_ratio >= 0.9 && out.variance_ratio <= 1.1;
  out.status = "ok";
  return out;
}

nlohmann::ordered_json CltReport::to_json() const {
  return nlohmann::ordered_json{{"status", status},
                                {"ks_distance", ks_distance},
                                {"ks_critical", ks_critical},
                                {"variance_ratio", variance_ratio},
                                {"passed", passed}};
}

double invariant_start_term(const DriftSpec& b, const DriftSpec& h, double n, double x0,
                            const Grid& grid) {
  if (h.is_zero()) return 0.0;
  const double eps = 1.0 / std::sqrt(n);
  const DriftSpec perturbed = b.plus(h, eps);
  const InvariantDensity mu_b(b, grid);
  const InvariantDensity mu_p(perturbed, grid);
  return mu_p.log_value_at(x0) - mu_b.log_value_at(x0);
}

}  // namespace difflan
