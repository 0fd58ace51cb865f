#pragma once

// Backward dynamic-programming sweep computing a discrete Nash equilibrium
// joint control and both players' values at every node and time slice.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mcam/kernel.hpp"
#include "mcam/lattice.hpp"
#include "mcam/model.hpp"
#include "mcam/nash.hpp"

namespace mcam {

enum class SearchMode { BestResponse, Exhaustive };

struct SolverOptions {
  std::size_t workers = 1;
  bool full_history = false;
  double tolerance = 1e-12;
  std::size_t max_rounds = 50;
  SearchMode search = SearchMode::BestResponse;
  /// Restricts a player to a single control.
  std::array<std::optional<PlayerControl>, 2> fixed_controls{};
  /// Restricts a player's retention only; investment keeps the lattice grid.
  std::array<std::optional<double>, 2> fixed_retention{};
  /// Fraction of nodes re-verified for regret after each slice.
  double verify_fraction = 0.01;
};

/// Player k's admissible controls under the options' restrictions.
ControlSet player_controls(const Lattice& lattice, const SolverOptions& options, std::size_t player);

struct ValueSlice {
  double time = 0.0;
  std::array<std::vector<double>, 2> values;  // indexed by flat node
};

struct PolicySlice {
  double time = 0.0;
  std::vector<std::uint32_t> first;   // index into player 1's control set
  std::vector<std::uint32_t> second;  // index into player 2's control set
  std::vector<NashStatus> status;
};

struct NashDiagnostics {
  std::size_t best_response_iterations = 0;
  double max_regret = 0.0;
  std::size_t nodes_without_pure_equilibrium = 0;
  std::size_t nodes_verified_exhaustive = 0;
  std::size_t sampled_nodes = 0;
  double sampled_max_regret = 0.0;
};

class Solution {
 public:
  Solution(Lattice lattice, ControlSet first, ControlSet second);

  const Lattice& lattice() const { return lattice_; }
  const ControlSet& controls(std::size_t player) const { return player == 0 ? first_ : second_; }

  /// Stored value slices keyed by slice number (0..N). Slice N is terminal.
  const std::map<std::size_t, ValueSlice>& values() const { return values_; }
  const ValueSlice& value_slice(std::size_t n) const;
  /// Policy slices for n = 0..N-1.
  const std::vector<PolicySlice>& policies() const { return policies_; }
  const NashDiagnostics& diagnostics() const { return diagnostics_; }

  JointControl control_at(std::size_t slice, std::size_t flat) const;
  /// Control stored at slice floor(t / delta) and the nearest node. Throws
  /// std::logic_error when no policy has been computed.
  JointControl extract_policy(double t, const State& state, std::size_t regime) const;

 private:
  friend class GameSolver;

  Lattice lattice_;
  ControlSet first_;
  ControlSet second_;
  std::map<std::size_t, ValueSlice> values_;
  std::vector<PolicySlice> policies_;
  NashDiagnostics diagnostics_;
};

class GameSolver {
 public:
  /// Validates the spec and checks lambda * delta < 1.
  GameSolver(GameSpec spec, Lattice lattice, SolverOptions options = {});

  const GameSpec& spec() const { return spec_; }
  const Lattice& lattice() const { return lattice_; }
  const SolverOptions& options() const { return options_; }
  const ControlSet& controls(std::size_t player) const { return player == 0 ? first_ : second_; }
  JointControl joint(std::size_t i1, std::size_t i2) const {
    return JointControl::from(first_.at(i1), second_.at(i2));
  }

  CflReport cfl() const { return cfl_scan(spec_, lattice_, first_, second_); }

  ValueSlice terminal_values() const;

  /// One-step expectation for player k under joint control u, built from the
  /// explicit stencil and claim-target lists. Throws CflViolation.
  double node_backup(const ValueSlice& next, const NodeIndex& node, std::size_t slice,
                     const JointControl& u, std::size_t player) const;

  /// Same expectation through the precomputed kernels; u given by control indices.
  double node_backup(const ValueSlice& next, const NodeIndex& node, std::size_t slice,
                     std::size_t i1, std::size_t i2, std::size_t player) const;

  NashOutcome nash_at_node(const ValueSlice& next, const NodeIndex& node, std::size_t slice) const;
  NashOutcome exhaustive_at_node(const ValueSlice& next, const NodeIndex& node,
                                 std::size_t slice) const;
  double regret_at(const ValueSlice& next, const NodeIndex& node, std::size_t slice,
                   std::size_t i1, std::size_t i2) const;

  /// Full backward sweep. Throws CflViolation before computing any slice.
  Solution solve() const;

 private:
  struct NodeContext;
  NodeContext context(const ValueSlice& next, const NodeIndex& node, std::size_t slice) const;
  double backup(const NodeContext& ctx, std::size_t i1, std::size_t i2, std::size_t player) const;
  NashOutcome search(const NodeContext& ctx) const;

  GameSpec spec_;
  Lattice lattice_;
  SolverOptions options_;
  ControlSet first_;
  ControlSet second_;
  JumpKernel jumps_;
};

}  // namespace mcam
