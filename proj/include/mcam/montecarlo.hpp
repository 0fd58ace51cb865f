#pragma once

// Monte Carlo simulation of the controlled continuous-time dynamics under a
// feedback policy, used to cross-check solved values.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "mcam/lattice.hpp"
#include "mcam/model.hpp"

namespace mcam {

class Solution;

/// Piecewise-constant regime trajectory: regime `regimes[m]` holds on [starts[m], starts[m+1]).
struct RegimePath {
  std::vector<double> starts;
  std::vector<std::size_t> regimes;
  double horizon = 0.0;

  std::size_t at(double t) const;
  /// Total time spent in `regime` over [0, horizon].
  double occupation(std::size_t regime) const;
};

RegimePath simulate_regime_path(const RegimeGenerator& generator, double horizon,
                                std::size_t initial, std::mt19937_64& rng);
RegimePath simulate_regime_path(const RegimeGenerator& generator, double horizon,
                                std::size_t initial, std::uint64_t seed);

using FeedbackPolicy = std::function<JointControl(double t, const State& state, std::size_t regime)>;

FeedbackPolicy constant_policy(const JointControl& u);
/// Nearest-node lookup in the solved policy; the solution must outlive the policy.
FeedbackPolicy solution_policy(const Solution& solution);

struct SimConfig {
  std::size_t path_count = 1000;
  double euler_step = 0.01;
  std::uint64_t seed = 1;
  /// When set, states are clamped into these bounds after every update.
  std::optional<std::array<Interval, 3>> bounds;

  void collect_violations(const std::string& path, double horizon,
                          std::vector<std::string>& out) const;
};

struct PathResult {
  State terminal;
  std::size_t final_regime = 0;
  std::array<std::size_t, 2> claims{};  // accepted claim arrivals per insurer
};

/// One path from (initial, regime) over [0, T]. Throws SimulationError on a
/// nonfinite state, carrying the Euler step index.
PathResult simulate_path(const GameSpec& spec, const FeedbackPolicy& policy, const State& initial,
                         std::size_t regime, const SimConfig& config, std::mt19937_64& rng);

/// Generator for path `index`, independent of how paths are scheduled.
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index);

/// All paths of a run, in path order. Paths run on `workers` threads.
std::vector<PathResult> simulate_paths(const GameSpec& spec, const FeedbackPolicy& policy,
                                       const State& initial, std::size_t regime,
                                       const SimConfig& config, std::size_t workers = 1);

struct ValueEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t path_count = 0;
};

std::array<ValueEstimate, 2> summarize(const GameSpec& spec, const std::vector<PathResult>& paths);

std::array<ValueEstimate, 2> estimate_value(const GameSpec& spec, const FeedbackPolicy& policy,
                                            const State& initial, std::size_t regime,
                                            const SimConfig& config, std::size_t workers = 1);

}  // namespace mcam
