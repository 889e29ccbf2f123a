#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace difflan {

/// Exit-code contract of the batch front-end.
enum class RunStatus : int {
  Pass = 0,
  Error = 1,
  CheckFailed = 2,
};

/// Resolved experiment configuration. Parsed from a single JSON file;
/// dotted --override key=value pairs are applied on top before
/// validation.
struct ExperimentConfig {
  nlohmann::ordered_json raw;

  static ExperimentConfig load(const std::filesystem::path& file,
                               const std::vector<std::string>& overrides);
  static ExperimentConfig from_json(nlohmann::ordered_json j,
                                    const std::vector<std::string>& overrides = {});

  // Accessors with defaults; throw ConfigError on invalid entries.
  std::size_t grid_cells() const;
  /// Explicit mode count, or nullopt when the config says "auto" (the
  /// runner then applies the per-drift truncation policy).
  std::optional<std::size_t> explicit_modes() const;
  double sampling_distance() const;  // Delta
  double regularization() const;                  // delta
  double t_min() const;
  double theta_radius() const;
  std::uint64_t seed() const;
  unsigned threads() const;
  std::filesystem::path out_dir() const;

  nlohmann::ordered_json section(const std::string& name) const;
};

/// Runs one subcommand against a config; writes the JSON report plus
/// CSV artifacts into out_dir and returns the exit status. Understood
/// subcommands: spectrum, kernel, score, parabolic, simulate, lan-verify.
RunStatus run_subcommand(const std::string& subcommand, const ExperimentConfig& config);

}  // namespace difflan
