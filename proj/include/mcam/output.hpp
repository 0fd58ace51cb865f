#pragma once

// CSV and JSON emission for solve, sweep, simulate and consistency runs.
// Numbers are written with 17 significant digits; lines end in '\n'.

#include <array>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "mcam/config.hpp"
#include "mcam/kernel.hpp"
#include "mcam/montecarlo.hpp"
#include "mcam/solver.hpp"

namespace mcam {

std::string format_number(double value);

/// "t,regime,x1,x2,z,V1,V2,a1,b1,a2,b2,diagnostic"
extern const char* const kSliceHeader;

/// One row per node of a stored value slice. The terminal slice carries no
/// controls; its diagnostic column reads "terminal".
void write_slice_csv(std::ostream& out, const Solution& solution, std::size_t slice);

std::string diagnostics_json(const NashDiagnostics& d, const CflReport& cfl);

struct SweepSpec {
  int figure = 1;
  std::size_t vary_dim = 0;  // 0 = x1, 1 = x2
  State fixed;               // the varied coordinate is ignored
  std::size_t slice = 0;
};

/// Figure 1 varies x1 with x2 = 0; Figure 2 varies x2 with x1 = 1. Both fix z = 1.01.
SweepSpec figure_sweep(int figure);

/// Throws ValidationError when a fixed coordinate lies outside the lattice.
void validate_sweep(const SweepSpec& sweep, const Lattice& lattice);

/// One row per grid value of the varied coordinate, with both players' (a, b)
/// in every regime.
void write_sweep_csv(std::ostream& out, const Solution& solution, const SweepSpec& sweep);

struct EstimateRow {
  InitialState initial;
  std::array<ValueEstimate, 2> estimate;
  std::optional<std::array<double, 2>> grid_value;
};

void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows);
void write_paths_csv(std::ostream& out, std::size_t initial_index, const std::vector<PathResult>& paths,
                     bool header);

void write_consistency_csv(std::ostream& out, const ConsistencyReport& report);
std::string consistency_summary(const ConsistencyReport& report);

struct Manifest {
  std::string command;
  std::string config_hash;
  double wall_seconds = 0.0;
  std::size_t workers = 1;
  std::vector<std::string> files;
};

std::string manifest_json(const Manifest& m);

}  // namespace mcam
