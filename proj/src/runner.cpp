#include "difflan/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "difflan/errors.hpp"
#include "difflan/kernel.hpp"
#include "difflan/lanlab.hpp"
#include "difflan/parabolic.hpp"
#include "difflan/score.hpp"
#include "difflan/sim.hpp"
#include "difflan/spectral.hpp"
#include "difflan/version.hpp"

namespace difflan {

namespace fs = std::filesystem;

namespace {

nlohmann::ordered_json default_config() {
  return nlohmann::ordered_json{
      {"drift", {{"sine", {0.0, 1.0}}}},
      {"perturbation", {{"sine", {1.0}}}},
      {"grid_cells", 512},
      {"modes", "auto"},
      {"sampling_distance", 0.5},
      {"regularization", 0.05},
      {"t_min", 0.05},
      {"theta_radius", 10.0},
      {"seed", 20250801},
      {"threads", 0},
      {"out_dir", "out"},
  };
}

void deep_merge(nlohmann::ordered_json& base, const nlohmann::ordered_json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      deep_merge(base[it.key()], *it);
    } else {
      base[it.key()] = *it;
    }
  }
}

void apply_override(nlohmann::ordered_json& j, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like key=value: " + kv);
  }
  const std::string path = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  nlohmann::ordered_json parsed;
  try {
    parsed = nlohmann::ordered_json::parse(value);
  } catch (const nlohmann::json::exception&) {
    parsed = value;  // bare strings stay strings
  }
  nlohmann::ordered_json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override has an empty key segment: " + kv);
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + file.string());
  os << text;
}

void write_json_file(const fs::path& file, const nlohmann::ordered_json& j) {
  write_text(file, j.dump(2) + "\n");
}

struct Pipeline {
  Grid grid;
  InvariantDensity density;
  SpectralDecomposition dec;

  Pipeline(const DriftSpec& drift, std::size_t cells, std::size_t modes)
      : grid(cells),
        density(drift, grid),
        dec(GeneratorMatrix(drift, density, grid), modes) {}
};

// Mode count for a drift and time: the explicit config value, or the
// truncation policy J(t) = min(N/2, ceil(sqrt(ln(1e14)/(c t))) + 4) with
// c the drift's own sandwich constant. `floor` raises the count for
// consumers whose mode couplings decay only algebraically (score and
// likelihood-ratio pipelines).
std::size_t resolve_modes(const ExperimentConfig& cfg, const DriftSpec& drift,
                          double smallest_time, std::size_t floor = 8) {
  if (const auto explicit_count = cfg.explicit_modes()) return *explicit_count;
  const Grid grid(cfg.grid_cells());
  const InvariantDensity mu(drift, grid);
  const double c = std::numbers::pi * std::numbers::pi * mu.min_value() / mu.max_value();
  const double j = std::sqrt(std::log(1e14) / (c * std::max(smallest_time, 1e-6)));
  const std::size_t want = static_cast<std::size_t>(std::ceil(j)) + 4;
  return std::min(cfg.grid_cells() / 2, std::max(want, floor));
}

DriftSpec drift_from(const ExperimentConfig& cfg, const std::string& key) {
  if (!cfg.raw.contains(key)) throw ConfigError("config: missing \"" + key + "\"");
  return DriftSpec::from_json(cfg.raw.at(key));
}

void require_in_theta(const DriftSpec& d, double radius, const std::string& label) {
  if (d.c1_bound() > radius) {
    throw ConfigError("config: " + label + " outside the admissible ball (c1_bound " +
                      std::to_string(d.c1_bound()) + " > " + std::to_string(radius) + ")");
  }
}

nlohmann::ordered_json report_header(const std::string& subcommand,
                                     const ExperimentConfig& cfg) {
  return nlohmann::ordered_json{
      {"subcommand", subcommand}, {"version", kVersion}, {"config", cfg.raw}};
}

RunStatus finish(const fs::path& out_dir, const std::string& name,
                 nlohmann::ordered_json report, bool passed) {
  report["passed"] = passed;
  write_json_file(out_dir / (name + "_report.json"), report);
  return passed ? RunStatus::Pass : RunStatus::CheckFailed;
}

RunStatus run_spectrum(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir();
  const DriftSpec b = drift_from(cfg, "drift");
  require_in_theta(b, cfg.theta_radius(), "drift");
  const auto section = cfg.section("spectrum");
  const std::size_t modes =
      section.contains("modes") ? section.at("modes").get<std::size_t>() : 33;

  Pipeline pipe(b, cfg.grid_cells(), std::max<std::size_t>(modes, 8));
  const DiagnosticsReport diag = spectral_diagnostics(pipe.dec);
  const GrowthReport growth = sobolev_growth_check(pipe.dec);

  const std::vector<double> rich = SpectralDecomposition::richardson_eigenvalues(
      b, cfg.grid_cells(), std::min<std::size_t>(modes, 17));

  nlohmann::ordered_json report = report_header("spectrum", cfg);
  report["diagnostics"] = diag.to_json();
  report["sobolev_growth"] = growth.to_json();
  report["richardson_eigenvalues"] = rich;
  write_text(out / "spectrum_diagnostics.csv", diag.to_csv());
  return finish(out, "spectrum", std::move(report), diag.passed && growth.passed);
}

RunStatus run_kernel(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir();
  const DriftSpec b = drift_from(cfg, "drift");
  require_in_theta(b, cfg.theta_radius(), "drift");
  const auto section = cfg.section("kernel");
  std::vector<double> times{0.25};
  if (section.contains("times")) times = section.at("times").get<std::vector<double>>();
  for (double t : times) {
    if (t < cfg.t_min()) throw ConfigError("kernel: time below t_min");
  }
  double smallest = times.front();
  for (double t : times) smallest = std::min(smallest, t);

  Pipeline pipe(b, cfg.grid_cells(), resolve_modes(cfg, b, smallest));
  const IdentityReport idrep = kernel_identity_checks(pipe.dec, times, cfg.t_min());

  const HeatKernel hk(pipe.dec, cfg.sampling_distance(), cfg.t_min());
  write_text(out / "kernel_slice.csv", hk.matrix().to_csv());

  nlohmann::ordered_json report = report_header("kernel", cfg);
  report["identities"] = idrep.to_json();
  return finish(out, "kernel", std::move(report), idrep.passed);
}

RunStatus run_score(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir();
  const DriftSpec b = drift_from(cfg, "drift");
  const DriftSpec h = drift_from(cfg, "perturbation");
  require_in_theta(b, cfg.theta_radius(), "drift");
  require_in_theta(h, cfg.theta_radius(), "perturbation");
  const double delta = cfg.sampling_distance();
  const auto section = cfg.section("score");
  const double eta = section.contains("fd_eta") ? section.at("fd_eta").get<double>() : 1e-3;

  auto pipe = std::make_shared<Pipeline>(b, cfg.grid_cells(), resolve_modes(cfg, b, delta, 48));
  std::shared_ptr<const SpectralDecomposition> dec(pipe, &pipe->dec);
  const ScoreField score(dec, h, delta, cfg.t_min());
  const double lan2 = lan_norm_squared(score);
  const double centering = score.centering_defect();

  // Oracle agreement, reported field-relative.
  const std::size_t stride = std::max<std::size_t>(1, cfg.grid_cells() / 32);
  const GridMatrix gl = derivative_gl_oracle(pipe->dec, h, delta, 32, stride);
  const GridMatrix& d = score.derivative_values();
  double gl_defect = 0.0;
  for (std::size_t i = 0; i < gl.rows(); ++i) {
    for (std::size_t c = 0; c < gl.cols(); ++c) {
      gl_defect = std::max(gl_defect, std::abs(gl(i, c) - d(i, c * stride)));
    }
  }
  gl_defect /= std::max(d.max_abs(), 1e-300);

  const GridMatrix fd =
      derivative_fd_oracle(b, h, delta, eta, cfg.grid_cells(), pipe->dec.mode_count());
  const double fd_defect = field_relative_defect(fd, d);

  const bool passed = centering < 1e-6 && gl_defect < 1e-6 && fd_defect < 1e-3;

  write_text(out / "score_field.csv", score.values().to_csv());
  nlohmann::ordered_json report = report_header("score", cfg);
  report["lan_norm2"] = lan2;
  report["centering_defect"] = centering;
  report["gl_oracle_defect"] = gl_defect;
  report["fd_oracle_defect"] = fd_defect;
  report["fd_eta"] = eta;
  return finish(out, "score", std::move(report), passed);
}

RunStatus run_parabolic(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir();
  const DriftSpec b = drift_from(cfg, "drift");
  const DriftSpec h = drift_from(cfg, "perturbation");
  require_in_theta(b, cfg.theta_radius(), "drift");
  require_in_theta(h, cfg.theta_radius(), "perturbation");
  const auto section = cfg.section("parabolic");
  const double y = section.contains("target") ? section.at("target").get<double>() : 0.5;
  const std::size_t steps =
      section.contains("time_steps") ? section.at("time_steps").get<std::size_t>() : 2048;
  std::vector<std::size_t> orders{0, 1, 2};
  if (section.contains("orders")) orders = section.at("orders").get<std::vector<std::size_t>>();
  std::vector<double> etas;
  if (section.contains("etas")) {
    etas = section.at("etas").get<std::vector<double>>();
  } else {
    for (int i = 1; i <= 6; ++i) etas.push_back(std::pow(2.0, -i));
  }
  const double horizon = cfg.sampling_distance();
  const double delta = cfg.regularization();

  const Grid grid(cfg.grid_cells());
  const Pipeline zero(DriftSpec::zero(), cfg.grid_cells(), resolve_modes(cfg, DriftSpec::zero(), delta));

  const auto reports = taylor_order_study(b, h, y, delta, orders, etas, horizon, grid, steps,
                                          zero.dec, cfg.t_min());

  std::size_t deepest = 0;
  for (std::size_t k : orders) deepest = std::max(deepest, k);
  const RemainderStack stack(b, h, y, delta, deepest, horizon, grid, steps, zero.dec,
                             cfg.t_min());
  const double telescoping = stack.telescoping_defect();

  bool passed = telescoping < 1e-10;
  nlohmann::ordered_json order_json = nlohmann::ordered_json::array();
  for (const OrderReport& r : reports) {
    order_json.push_back(r.to_json());
    passed = passed && r.passed;
  }

  // Final v_1 slice for plots / cross-checks.
  {
    std::ostringstream os;
    const auto v1 = stack.v_final(std::min<std::size_t>(1, deepest));
    char buf[64];
    for (std::size_t i = 0; i < v1.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid.node(i), v1[i]);
      os << buf;
    }
    write_text(out / "parabolic_v1.csv", os.str());
  }

  nlohmann::ordered_json report = report_header("parabolic", cfg);
  report["orders"] = order_json;
  report["telescoping_defect"] = telescoping;
  return finish(out, "parabolic", std::move(report), passed);
}

RunStatus run_simulate(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir();
  const DriftSpec b = drift_from(cfg, "drift");
  require_in_theta(b, cfg.theta_radius(), "drift");
  const auto section = cfg.section("simulate");
  const std::string method =
      section.contains("method") ? section.at("method").get<std::string>() : "exact";
  const double delta = cfg.sampling_distance();

  LowFreqSample sample;
  bool physics_pass = true;
  nlohmann::ordered_json extra;
  if (method == "euler") {
    const double horizon =
        section.contains("horizon") ? section.at("horizon").get<double>() : 100.0;
    const double dt = section.contains("dt") ? section.at("dt").get<double>() : 1e-3;
    RngStream rng(cfg.seed(), 0);
    const Grid grid(cfg.grid_cells());
    const InvariantDensity mu(b, grid);
    const double x0 = sample_stationary(mu, rng);
    const std::vector<double> path = simulate_reflected(b, x0, horizon, dt, rng);
    sample = subsample(path, dt, delta);
    sample.seed = cfg.seed();
    if (section.contains("occupation_check") && section.at("occupation_check").get<bool>()) {
      const OccupationCheck chk = occupation_chi_square(path, dt, mu);
      physics_pass = chk.passed;
      extra["occupation"] = chk.to_json();
    }
  } else if (method == "exact") {
    const std::size_t n =
        section.contains("transitions") ? section.at("transitions").get<std::size_t>() : 1000;
    const Pipeline pipe(b, cfg.grid_cells(), resolve_modes(cfg, b, delta));
    RngStream rng(cfg.seed(), 0);
    sample = exact_skeleton_sample(pipe.dec, delta, n, rng, cfg.t_min());
  } else {
    throw ConfigError("simulate: method must be \"euler\" or \"exact\"");
  }

  write_text(out / "sample.csv", sample.to_csv());
  write_json_file(out / "sample.meta.json", sample.metadata_json());
  nlohmann::ordered_json report = report_header("simulate", cfg);
  report["sample"] = sample.metadata_json();
  if (!extra.is_null()) deep_merge(report, extra);
  return finish(out, "simulate", std::move(report), physics_pass);
}

RunStatus run_lan_verify(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir();
  const DriftSpec b = drift_from(cfg, "drift");
  const DriftSpec h = drift_from(cfg, "perturbation");
  const auto section = cfg.section("lan");
  std::vector<std::size_t> n_list{100, 400, 1600};
  if (section.contains("n_list")) n_list = section.at("n_list").get<std::vector<std::size_t>>();
  const std::size_t replicates =
      section.contains("replicates") ? section.at("replicates").get<std::size_t>() : 200;
  const std::size_t clt_n = section.contains("clt_n") ? section.at("clt_n").get<std::size_t>() : 500;
  const std::size_t clt_replicates =
      section.contains("clt_replicates") ? section.at("clt_replicates").get<std::size_t>() : 1000;
  const double remainder_threshold = section.contains("remainder_threshold")
                                         ? section.at("remainder_threshold").get<double>()
                                         : 0.05;

  LanExperimentConfig lan_cfg;
  lan_cfg.grid_cells = cfg.grid_cells();
  lan_cfg.modes = resolve_modes(cfg, b, cfg.sampling_distance(), 48);
  lan_cfg.delta = cfg.sampling_distance();
  lan_cfg.t_min = cfg.t_min();
  lan_cfg.theta_radius = cfg.theta_radius();
  lan_cfg.threads = cfg.threads();

  const auto reports =
      lan_experiment(b, h, cfg.sampling_distance(), n_list, replicates, cfg.seed(), lan_cfg);

  bool decreasing = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    decreasing = decreasing &&
                 reports[i].median_abs_remainder < reports[i - 1].median_abs_remainder;
  }
  const bool terminal_ok =
      reports.empty() || reports.back().median_abs_remainder < remainder_threshold;

  // Dedicated CLT run (length and replicate count independent of n_list).
  const auto clt_reports = lan_experiment(b, h, cfg.sampling_distance(), {clt_n},
                                          clt_replicates, cfg.seed() + 1, lan_cfg);
  const CltReport clt = clt_check(clt_reports.front());

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  std::ostringstream plot;
  plot << "n,median_abs_remainder,mean_score,score_variance\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    runs.push_back(reports[i].to_json());
    write_text(out / ("lan_records_n" + std::to_string(reports[i].n) + ".csv"),
               reports[i].records_csv());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", reports[i].n,
                  reports[i].median_abs_remainder, reports[i].mean_score,
                  reports[i].score_variance);
    plot << buf;
  }
  write_text(out / "lan_plotdata.csv", plot.str());

  // QQ data for the CLT run.
  {
    std::vector<double> z;
    const double sd = std::sqrt(clt_reports.front().lan_norm2);
    for (const LanReplicate& r : clt_reports.front().records) z.push_back(r.score_term / sd);
    std::sort(z.begin(), z.end());
    std::ostringstream qq;
    qq << "quantile,standardized_score\n";
    char buf[96];
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(z.size());
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", q, z[i]);
      qq << buf;
    }
    write_text(out / "lan_qq.csv", qq.str());
  }

  // Initial-density term, reported per n so its decay is visible.
  nlohmann::ordered_json start_terms = nlohmann::ordered_json::array();
  {
    const Grid grid(cfg.grid_cells());
    for (std::size_t n : n_list) {
      double sup = 0.0;
      for (std::size_t i = 0; i < grid.size(); i += grid.size() / 16) {
        sup = std::max(sup, std::abs(invariant_start_term(b, h, static_cast<double>(n),
                                                          grid.node(i), grid)));
      }
      start_terms.push_back({{"n", n}, {"sup_abs", sup}});
    }
  }

  const bool zero_direction = h.is_zero();
  const bool passed = zero_direction || (decreasing && terminal_ok && clt.passed);

  nlohmann::ordered_json report = report_header("lan-verify", cfg);
  report["runs"] = runs;
  report["invariant_start_term"] = start_terms;
  report["median_decreasing"] = decreasing;
  report["terminal_median"] =
      reports.empty() ? 0.0 : reports.back().median_abs_remainder;
  report["remainder_threshold"] = remainder_threshold;
  report["clt"] = clt.to_json();
  return finish(out, "lan_verify", std::move(report), passed);
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const fs::path& file,
                                        const std::vector<std::string>& overrides) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot read config file " + file.string());
  nlohmann::ordered_json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json(std::move(j), overrides);
}

ExperimentConfig ExperimentConfig::from_json(nlohmann::ordered_json j,
                                             const std::vector<std::string>& overrides) {
  nlohmann::ordered_json merged = default_config();
  deep_merge(merged, j);
  for (const std::string& kv : overrides) apply_override(merged, kv);
  ExperimentConfig cfg;
  cfg.raw = std::move(merged);
  // Eager validation of the common fields.
  cfg.grid_cells();
  cfg.sampling_distance();
  cfg.regularization();
  cfg.t_min();
  cfg.theta_radius();
  return cfg;
}

std::size_t ExperimentConfig::grid_cells() const {
  const auto n = raw.at("grid_cells").get<std::size_t>();
  if (n < 16 || (n & (n - 1)) != 0) {
    throw ConfigError("config: grid_cells must be a power of two >= 16");
  }
  return n;
}

std::optional<std::size_t> ExperimentConfig::explicit_modes() const {
  const auto& m = raw.at("modes");
  if (m.is_number_unsigned() || m.is_number_integer()) {
    const auto v = m.get<std::size_t>();
    if (v < 2 || v > grid_cells()) throw ConfigError("config: modes must be in [2, N]");
    return v;
  }
  if (m.is_string() && m.get<std::string>() == "auto") return std::nullopt;
  throw ConfigError("config: modes must be an integer or \"auto\"");
}

double ExperimentConfig::sampling_distance() const {
  const double d = raw.at("sampling_distance").get<double>();
  if (!(d >= t_min())) throw ConfigError("config: sampling_distance below t_min");
  return d;
}

double ExperimentConfig::regularization() const {
  const double d = raw.at("regularization").get<double>();
  if (!(d >= t_min())) throw ConfigError("config: regularization below t_min");
  return d;
}

double ExperimentConfig::t_min() const {
  const double t = raw.at("t_min").get<double>();
  if (!(t > 0.0)) throw ConfigError("config: t_min must be positive");
  return t;
}

double ExperimentConfig::theta_radius() const {
  const double b = raw.at("theta_radius").get<double>();
  if (!(b > 0.0)) throw ConfigError("config: theta_radius must be positive");
  return b;
}

std::uint64_t ExperimentConfig::seed() const { return raw.at("seed").get<std::uint64_t>(); }

unsigned ExperimentConfig::threads() const { return raw.at("threads").get<unsigned>(); }

fs::path ExperimentConfig::out_dir() const {
  return fs::path(raw.at("out_dir").get<std::string>());
}

nlohmann::ordered_json ExperimentConfig::section(const std::string& name) const {
  if (raw.contains(name) && raw.at(name).is_object()) return raw.at(name);
  return nlohmann::ordered_json::object();
}

RunStatus run_subcommand(const std::string& subcommand, const ExperimentConfig& config) {
  try {
    std::filesystem::create_directories(config.out_dir());
    if (subcommand == "spectrum") return run_spectrum(config);
    if (subcommand == "kernel") return run_kernel(config);
    if (subcommand == "score") return run_score(config);
    if (subcommand == "parabolic") return run_parabolic(config);
    if (subcommand == "simulate") return run_simulate(config);
    if (subcommand == "lan-verify") return run_lan_verify(config);
    throw ConfigError("unknown subcommand: " + subcommand);
  } catch (const std::exception& e) {
    const nlohmann::ordered_json err{{"error", e.what()}, {"subcommand", subcommand}};
    try {
      std::filesystem::create_directories(config.out_dir());
      write_json_file(config.out_dir() / "error.json", err);
    } catch (...) {
      // fall through to stderr
    }
    std::cerr << err.dump() << "\n";
    return RunStatus::Error;
  }
}

}  // namespace difflan
