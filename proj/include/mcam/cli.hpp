#pragma once

// Command-line front end: solve, simulate, consistency and sweep runs.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mcam/config.hpp"

namespace mcam {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitValidation = 3,
  kExitCfl = 4,
  kExitRuntime = 5,
};

struct RunOverrides {
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  bool full_history = false;
  std::optional<std::uint64_t> seed;
};

/// Applies command-line overrides on top of a loaded configuration.
void apply_overrides(RunConfig& config, const RunOverrides& overrides);

/// Each run writes into config.output_directory and returns the files it wrote.
std::vector<std::string> run_solve(const RunConfig& config, std::ostream& log);
std::vector<std::string> run_sweep(const RunConfig& config, int figure, std::ostream& log);
std::vector<std::string> run_simulate(const RunConfig& config, bool write_paths, std::ostream& log);
std::vector<std::string> run_consistency(const RunConfig& config, std::size_t samples,
                                         std::uint64_t seed, std::ostream& log);

/// Full command line: parses arguments, runs, maps failures to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcam
