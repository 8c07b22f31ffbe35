// Command-line front end: subcommand parsing with typed overrides, experiment
// execution, CSV emission, and SVG charts.
//
// Exit codes: 0 success, 1 runtime/config error, 2 usage error.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "deeprx/config.hpp"
#include "deeprx/harness.hpp"

namespace deeprx {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliInvocation {
  enum class Command { Run, Sweep, Pilots, Ablation, GradCheck, Oracle, Help };
  Command command = Command::Help;
  ExperimentConfig config;
  std::string out_dir = "out";
  std::string config_path;

  // run
  int run_seed = 0;
  // pilots
  std::vector<int> pilot_grid = {100, 200, 300, 400, 600};
  double pilots_snr_db = 12.0;
  // gradcheck / oracle
  int gradcheck_seeds = 5;
  int oracle_trials = 200;

  std::string help_text;  // filled when command == Help
};

// "9:13:1" (inclusive range) or "9,10.5,12".
std::vector<double> parse_snr_spec(const std::string& spec);

// Parses argv (without the program name), loads the config file when given,
// applies DEEPRX_SEED and flag overrides, and validates. Throws UsageError for
// malformed invocations and ConfigError for config-file problems.
CliInvocation parse_and_validate(const std::vector<std::string>& args);

// Full driver: parse, execute, write outputs. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deeprx
