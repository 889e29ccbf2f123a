// Batch front-end: wires JSON experiment configs to the library modules
// and emits JSON reports plus CSV artifacts.
//
//   difflan <subcommand> --config experiment.json [--override key=value ...]
//
// Subcommands: spectrum, kernel, score, parabolic, simulate, lan-verify.
// Exit code 0 when every check in the run passes, 2 when a check fails,
// 1 on configuration or runtime errors.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "difflan/errors.hpp"
#include "difflan/runner.hpp"
#include "difflan/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"difflan: spectral and Monte Carlo laboratory for low-frequency "
               "observed reflected diffusions"};
  app.set_version_flag("--version", difflan::kVersion);

  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = 0;

  const std::vector<std::string> names = {"spectrum", "kernel",   "score",
                                          "parabolic", "simulate", "lan-verify"};
  std::vector<CLI::App*> subs;
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--override", overrides, "dotted key=value config overrides");
    sub->add_option("--threads", threads, "worker thread cap (also: DIFFLAN_THREADS)");
    subs.push_back(sub);
  }
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  std::string chosen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (subs[i]->parsed()) chosen = names[i];
  }

  try {
    if (threads > 0) overrides.push_back("threads=" + std::to_string(threads));
    const auto config = difflan::ExperimentConfig::load(config_path, overrides);
    return static_cast<int>(difflan::run_subcommand(chosen, config));
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
    return static_cast<int>(difflan::RunStatus::Error);
  }
}
