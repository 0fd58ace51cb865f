#pragma once

// Run configuration: JSON ingestion, validation and round-trip emission.
//
// Regimes are numbered from 1 in the file and from 0 in memory.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcam/lattice.hpp"
#include "mcam/model.hpp"
#include "mcam/montecarlo.hpp"
#include "mcam/solver.hpp"

namespace mcam {

struct InitialState {
  State state;
  std::size_t regime = 0;
};

struct SimulationSection {
  SimConfig config;
  /// Empty means: follow the solved policy.
  std::optional<JointControl> constant_control;
  bool clamp_to_lattice = true;
  std::vector<InitialState> initial_states;
};

struct RunConfig {
  GameSpec game;
  LatticeSpec lattice;
  SolverOptions solver;
  std::optional<SimulationSection> simulation;
  std::string output_directory = "out";
};

/// Parses and validates. Throws ParseError (with line and column) on
/// malformed JSON and ValidationError listing every violation.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

nlohmann::ordered_json to_json(const RunConfig& config);
std::string dump_config(const RunConfig& config);

/// Violations of the nested invariants plus cross-section checks.
std::vector<std::string> collect_violations(const RunConfig& config);

/// FNV-1a 64-bit hash of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mcam
