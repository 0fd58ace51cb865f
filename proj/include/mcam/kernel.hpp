#pragma once

// One-step transition law of the approximating chain.
//
// Player k's law moves x_k and z by one grid step (upwind drift plus central
// diffusion), switches regime at rate q_ij, and with probability lambda*delta
// applies one claim: an own claim (x_k decreases by the retained amount) or an
// opponent claim (x_k increases by kappa_k times the opponent's retained
// amount). The opponent coordinate x_l is frozen in player k's law. Targets
// outside the lattice are clamped to the boundary and their mass merged.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcam/lattice.hpp"
#include "mcam/model.hpp"

namespace mcam {

/// Raw diffusion-part weights before any clamping.
struct LocalWeights {
  double up_x = 0.0;    // x_k + h
  double down_x = 0.0;  // x_k - h
  double up_z = 0.0;
  double down_z = 0.0;
  double switching = 0.0;  // sum over j != i of q_ij delta
  double self = 1.0;       // may be negative when the CFL condition fails
  double drift_own = 0.0;
  double drift_index = 0.0;
  double variance_own = 0.0;  // squared volatility of x_k
  double variance_index = 0.0;
};

LocalWeights local_weights(const GameSpec& spec, const State& state, double t, std::size_t regime,
                           const JointControl& u, std::size_t player, double h, double delta);

/// Largest time step keeping the self-transition probability nonnegative at this point.
double max_admissible_time_step(const LocalWeights& w, double h, double delta);

class CflViolation : public std::runtime_error {
 public:
  CflViolation(NodeIndex node, double t, JointControl control, std::size_t player,
               double self_probability, double max_time_step);

  NodeIndex node;
  double time;
  JointControl control;
  std::size_t player;
  double self_probability;
  double max_time_step;
};

struct StencilEntry {
  NodeIndex target;
  double probability;
};

struct Stencil {
  std::vector<StencilEntry> entries;  // targets other than the origin node
  double self_probability = 1.0;      // includes mass lumped back by clamping

  double total() const;
};

/// Diffusion-and-switching law for player k; throws CflViolation on a negative self weight.
Stencil diffusion_stencil(const GameSpec& spec, const Lattice& lattice, const NodeIndex& node,
                          double t, const JointControl& u, std::size_t player);

/// Split of one step into "no claim" and "claim by insurer k".
struct ClaimWeights {
  double no_claim = 1.0;                // 1 - lambda delta
  std::array<double, 2> claim{};        // lambda_k delta
};

/// no_claim is formed from the rounded claim weights, so the three sum to 1 exactly.
ClaimWeights claim_weights(const GameSpec& spec, std::size_t regime, double delta);

struct JumpMixture {
  double total_rate;
  double from_player1;  // probability an event is insurer 1's claim

  double from(std::size_t player) const { return player == 0 ? from_player1 : 1.0 - from_player1; }
};

/// Throws DomainError when the total claim rate is not positive.
JumpMixture jump_mixture(const GameSpec& spec, std::size_t regime);

/// Claim-event targets for player k (conditional on one claim occurring).
std::vector<StencilEntry> jump_targets(const GameSpec& spec, const Lattice& lattice,
                                       const NodeIndex& node, const JointControl& u,
                                       std::size_t player);

struct JumpEntry {
  std::uint32_t target;  // index along the player's own surplus dimension
  double weight;
};

/// Precomputed one-dimensional claim transitions for every retention level in
/// the players' control sets.
class JumpKernel {
 public:
  JumpKernel(const GameSpec& spec, const Lattice& lattice, const ControlSet& first,
             const ControlSet& second);

  /// Own-claim transitions for player k holding retention level `a_index` of its own set.
  std::span<const JumpEntry> own(std::size_t player, std::size_t regime, std::size_t a_index,
                                 std::size_t source) const {
    return own_[player].row(regime, a_index, source);
  }
  /// Opponent-claim transitions for player k when the opponent holds `opp_a_index`.
  std::span<const JumpEntry> opponent(std::size_t player, std::size_t regime,
                                      std::size_t opp_a_index, std::size_t source) const {
    return opp_[player].row(regime, opp_a_index, source);
  }

 private:
  struct Table {
    std::size_t levels = 0;
    std::size_t sources = 0;
    std::vector<JumpEntry> entries;
    std::vector<std::size_t> offsets;  // one per (regime, level, source), plus end

    std::span<const JumpEntry> row(std::size_t regime, std::size_t level, std::size_t source) const {
      const std::size_t r = (regime * levels + level) * sources + source;
      return {entries.data() + offsets[r], offsets[r + 1] - offsets[r]};
    }
  };

  static Table build(const GameSpec& spec, const Lattice& lattice, std::size_t dim,
                     std::size_t claimant, const std::vector<double>& retentions, double factor);

  std::array<Table, 2> own_;
  std::array<Table, 2> opp_;
};

/// Result of scanning every (node, control, player, slice) for the CFL condition.
struct CflReport {
  double worst_self_probability = 1.0;
  NodeIndex worst_node;
  double worst_time = 0.0;
  JointControl worst_control;
  std::size_t worst_player = 0;
  double max_time_step = 0.0;  // largest admissible delta for the given h
  double max_abs_drift = 0.0;  // over both surpluses and the index
  double max_claim_rate = 0.0;

  bool ok() const { return worst_self_probability >= 0.0; }
};

/// Exact worst case over the lattice. The drift is affine in x_k, so its
/// magnitude peaks at the two ends of the x_k range; the other terms do not
/// depend on the surplus coordinates.
CflReport cfl_scan(const GameSpec& spec, const Lattice& lattice, const ControlSet& first,
                   const ControlSet& second);

/// Throws CflViolation built from the report when it failed.
void require_cfl(const CflReport& report);

struct ConsistencySample {
  NodeIndex node;
  std::size_t slice = 0;
  JointControl control;
  std::size_t player = 0;
};

struct ConsistencyRow {
  ConsistencySample sample;
  double mean_error_own = 0.0;    // |E[dx_k] - mu_k delta|
  double mean_error_index = 0.0;  // |E[dz] - mu_Z delta|
  double variance_error = 0.0;    // max-abs entry over the (x_k, z) block
  double variance_bound = 0.0;    // C delta (h + delta)
  double self_probability = 0.0;
};

struct ConsistencyReport {
  Vec3 mean_error{};  // x1 (player-1 stencils), x2 (player-2 stencils), z
  double variance_error = 0.0;
  double coefficient_bound = 0.0;  // C
  double variance_tolerance = 0.0;  // C delta (h + delta)
  double cfl_margin = 1.0;
  std::size_t skipped_boundary = 0;
  std::vector<ConsistencyRow> rows;
};

/// Draws `count` random interior samples from the lattice and control sets.
std::vector<ConsistencySample> random_consistency_samples(const Lattice& lattice,
                                                          const ControlSet& first,
                                                          const ControlSet& second,
                                                          std::size_t count,
                                                          std::uint64_t seed);

/// Compares exact one-step moments of each sampled diffusion stencil with the
/// drift and covariance of the continuous dynamics. Boundary samples are
/// counted and skipped. `coefficient_bound` is the C of the variance tolerance.
ConsistencyReport check_local_consistency(const GameSpec& spec, const Lattice& lattice,
                                          const std::vector<ConsistencySample>& samples,
                                          double coefficient_bound);

/// C = max(M, M^2) with M the largest drift magnitude over the lattice.
double consistency_coefficient(const CflReport& report);

}  // namespace mcam
