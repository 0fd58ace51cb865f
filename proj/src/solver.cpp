#include "mcam/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mcam/errors.hpp"
#include "mcam/parallel.hpp"

namespace mcam {

const char* to_string(NashStatus status) {
  switch (status) {
    case NashStatus::ConvergedBestResponse:
      return "converged-best-response";
    case NashStatus::VerifiedExhaustive:
      return "verified-exhaustive";
    case NashStatus::NoPureEquilibrium:
      return "no-pure-equilibrium";
  }
  return "unknown";
}

Solution::Solution(Lattice lattice, ControlSet first, ControlSet second)
    : lattice_(std::move(lattice)), first_(std::move(first)), second_(std::move(second)) {}

const ValueSlice& Solution::value_slice(std::size_t n) const {
  const auto it = values_.find(n);
  if (it == values_.end()) throw std::out_of_range("value slice not stored");
  return it->second;
}

JointControl Solution::control_at(std::size_t slice, std::size_t flat) const {
  const PolicySlice& p = policies_.at(slice);
  return JointControl::from(first_.at(p.first[flat]), second_.at(p.second[flat]));
}

JointControl Solution::extract_policy(double t, const State& state, std::size_t regime) const {
  if (policies_.empty()) throw std::logic_error("policy queried before the game was solved");
  if (!(t >= 0.0)) throw DomainError("policy query time must be >= 0");
  if (regime >= lattice_.regimes()) throw DomainError("policy query regime out of range");
  const double slice = std::floor(t / lattice_.time_step() + 1e-9);
  const auto n = std::min(static_cast<std::size_t>(slice), policies_.size() - 1);
  return control_at(n, lattice_.flat(lattice_.state_to_nearest_node(state, regime)));
}

namespace {

GameSpec validated(GameSpec spec) {
  spec.validate();
  return spec;
}

}  // namespace

struct GameSolver::NodeContext {
  const ValueSlice* next;
  NodeIndex node;
  std::size_t flat;
  double t;
  State state;
  double no_claim;                     // 1 - lambda delta
  std::array<double, 2> claim_weight;  // lambda_k delta
  std::array<std::vector<double>, 2> own_jump;  // by own retention index
  std::array<std::vector<double>, 2> opp_jump;  // by opponent retention index
};

ControlSet player_controls(const Lattice& lattice, const SolverOptions& options, std::size_t player) {
  if (const auto& fixed = options.fixed_controls[player]) return ControlSet::singleton(*fixed);
  if (const auto& a = options.fixed_retention[player]) return ControlSet({*a}, lattice.investment_levels());
  return lattice.control_set();
}

GameSolver::GameSolver(GameSpec spec, Lattice lattice, SolverOptions options)
    : spec_(validated(std::move(spec))),
      lattice_(std::move(lattice)),
      options_(options),
      first_(player_controls(lattice_, options, 0)),
      second_(player_controls(lattice_, options, 1)),
      jumps_(spec_, lattice_, first_, second_) {
  std::vector<std::string> violations;
  if (lattice_.regimes() != spec_.regimes()) {
    violations.push_back("lattice regime count differs from the generator size");
  }
  for (std::size_t i = 0; i < spec_.regimes(); ++i) {
    if (!(spec_.total_claim_rate(i) * lattice_.time_step() < 1.0)) {
      violations.push_back("lattice.time_step: total claim rate times time step must be < 1 in regime " +
                           std::to_string(i + 1));
    }
  }
  if (options_.workers == 0) violations.push_back("solver.workers: must be >= 1");
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

ValueSlice GameSolver::terminal_values() const {
  ValueSlice out;
  out.time = lattice_.time_of(lattice_.steps());
  for (std::size_t k = 0; k < 2; ++k) {
    out.values[k].resize(lattice_.size());
    for (std::size_t f = 0; f < lattice_.size(); ++f) {
      const State s = lattice_.node_to_state(lattice_.node(f));
      out.values[k][f] = utility(spec_.insurers[k], s.surplus(k));
    }
  }
  return out;
}

double GameSolver::node_backup(const ValueSlice& next, const NodeIndex& node, std::size_t slice,
                               const JointControl& u, std::size_t player) const {
  const double t = lattice_.time_of(slice);
  const auto& v = next.values[player];
  const Stencil stencil = diffusion_stencil(spec_, lattice_, node, t, u, player);
  double diffusion_part = stencil.self_probability * v[lattice_.flat(node)];
  for (const auto& e : stencil.entries) diffusion_part += e.probability * v[lattice_.flat(e.target)];

  const double claim_probability = spec_.total_claim_rate(node.regime) * lattice_.time_step();
  if (claim_probability == 0.0) return diffusion_part;
  double claim_part = 0.0;
  for (const auto& e : jump_targets(spec_, lattice_, node, u, player)) {
    claim_part += e.probability * v[lattice_.flat(e.target)];
  }
  return (1.0 - claim_probability) * diffusion_part + claim_probability * claim_part;
}

GameSolver::NodeContext GameSolver::context(const ValueSlice& next, const NodeIndex& node,
                                            std::size_t slice) const {
  NodeContext ctx;
  ctx.next = &next;
  ctx.node = node;
  ctx.flat = lattice_.flat(node);
  ctx.t = lattice_.time_of(slice);
  ctx.state = lattice_.node_to_state(node);
  const double delta = lattice_.time_step();
  const ClaimWeights cw = claim_weights(spec_, node.regime, delta);
  ctx.no_claim = cw.no_claim;
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t l = other_player(k);
    ctx.claim_weight[k] = cw.claim[k];
    const auto& v = next.values[k];
    const std::size_t j = node.j[k];
    const std::size_t base = ctx.flat - j * lattice_.stride(k);
    const auto expect = [&](std::span<const JumpEntry> entries) {
      double sum = 0.0;
      for (const auto& e : entries) sum += e.weight * v[base + e.target * lattice_.stride(k)];
      return sum;
    };
    ctx.own_jump[k].resize(controls(k).retentions().size());
    for (std::size_t a = 0; a < ctx.own_jump[k].size(); ++a) {
      ctx.own_jump[k][a] = expect(jumps_.own(k, node.regime, a, j));
    }
    ctx.opp_jump[k].resize(controls(l).retentions().size());
    for (std::size_t a = 0; a < ctx.opp_jump[k].size(); ++a) {
      ctx.opp_jump[k][a] = expect(jumps_.opponent(k, node.regime, a, j));
    }
  }
  return ctx;
}

double GameSolver::backup(const NodeContext& ctx, std::size_t i1, std::size_t i2,
                          std::size_t player) const {
  const JointControl u = joint(i1, i2);
  const LocalWeights w = local_weights(spec_, ctx.state, ctx.t, ctx.node.regime, u, player,
                                       lattice_.h(), lattice_.time_step());
  const auto& v = ctx.next->values[player];
  const std::size_t f = ctx.flat;

  double self = w.self;
  double sum = 0.0;
  const auto neighbour = [&](std::size_t dim, bool up, double p) {
    const std::size_t j = ctx.node.j[dim];
    if (up ? j + 1 >= lattice_.count(dim) : j == 0) {
      self += p;
    } else {
      sum += p * v[up ? f + lattice_.stride(dim) : f - lattice_.stride(dim)];
    }
  };
  neighbour(player, true, w.up_x);
  neighbour(player, false, w.down_x);
  neighbour(2, true, w.up_z);
  neighbour(2, false, w.down_z);
  const std::size_t regime = ctx.node.regime;
  const std::size_t spatial_offset = f - regime * lattice_.spatial_size();
  for (std::size_t j = 0; j < spec_.regimes(); ++j) {
    if (j == regime) continue;
    sum += spec_.generator.rate(regime, j) * lattice_.time_step() *
           v[j * lattice_.spatial_size() + spatial_offset];
  }
  sum += self * v[f];

  const std::size_t own_a = player == 0 ? first_.retention_index(i1) : second_.retention_index(i2);
  const std::size_t opp_a = player == 0 ? second_.retention_index(i2) : first_.retention_index(i1);
  const std::size_t opp = other_player(player);
  return ctx.no_claim * sum + ctx.claim_weight[player] * ctx.own_jump[player][own_a] +
         ctx.claim_weight[opp] * ctx.opp_jump[player][opp_a];
}

double GameSolver::node_backup(const ValueSlice& next, const NodeIndex& node, std::size_t slice,
                               std::size_t i1, std::size_t i2, std::size_t player) const {
  return backup(context(next, node, slice), i1, i2, player);
}

NashOutcome GameSolver::search(const NodeContext& ctx) const {
  const auto payoff = [&](std::size_t k, std::size_t i1, std::size_t i2) {
    return backup(ctx, i1, i2, k);
  };
  if (options_.search == SearchMode::Exhaustive) {
    return exhaustive_equilibrium(first_.size(), second_.size(), payoff, options_.tolerance);
  }
  return best_response_equilibrium(first_.size(), second_.size(), payoff, options_.tolerance,
                                   options_.max_rounds);
}

NashOutcome GameSolver::nash_at_node(const ValueSlice& next, const NodeIndex& node,
                                     std::size_t slice) const {
  return search(context(next, node, slice));
}

NashOutcome GameSolver::exhaustive_at_node(const ValueSlice& next, const NodeIndex& node,
                                           std::size_t slice) const {
  const NodeContext ctx = context(next, node, slice);
  return exhaustive_equilibrium(
      first_.size(), second_.size(),
      [&](std::size_t k, std::size_t i1, std::size_t i2) { return backup(ctx, i1, i2, k); },
      options_.tolerance);
}

double GameSolver::regret_at(const ValueSlice& next, const NodeIndex& node, std::size_t slice,
                             std::size_t i1, std::size_t i2) const {
  const NodeContext ctx = context(next, node, slice);
  return max_regret(first_.size(), second_.size(), i1, i2,
                    [&](std::size_t k, std::size_t a, std::size_t b) { return backup(ctx, a, b, k); });
}

Solution GameSolver::solve() const {
  require_cfl(cfl());

  Solution solution(lattice_, first_, second_);
  const std::size_t steps = lattice_.steps();
  const std::size_t size = lattice_.size();
  ValueSlice next = terminal_values();
  solution.values_[steps] = next;
  solution.policies_.resize(steps);
  NashDiagnostics& diag = solution.diagnostics_;

  std::vector<NashOutcome> outcomes(size);
  for (std::size_t n = steps; n-- > 0;) {
    ValueSlice current;
    current.time = lattice_.time_of(n);
    current.values[0].resize(size);
    current.values[1].resize(size);

    parallel_for(size, options_.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t f = begin; f < end; ++f) {
        outcomes[f] = nash_at_node(next, lattice_.node(f), n);
      }
    });

    PolicySlice& policy = solution.policies_[n];
    policy.time = current.time;
    policy.first.resize(size);
    policy.second.resize(size);
    policy.status.resize(size);
    for (std::size_t f = 0; f < size; ++f) {
      const NashOutcome& o = outcomes[f];
      current.values[0][f] = o.values[0];
      current.values[1][f] = o.values[1];
      policy.first[f] = static_cast<std::uint32_t>(o.first);
      policy.second[f] = static_cast<std::uint32_t>(o.second);
      policy.status[f] = o.status;
      diag.best_response_iterations += o.rounds;
      diag.max_regret = std::max(diag.max_regret, o.regret);
      if (o.status == NashStatus::NoPureEquilibrium) ++diag.nodes_without_pure_equilibrium;
      if (o.status == NashStatus::VerifiedExhaustive) ++diag.nodes_verified_exhaustive;
    }

    // Independent regret re-scan on a deterministic node sample.
    const auto sample_count = static_cast<std::size_t>(
        std::ceil(options_.verify_fraction * static_cast<double>(size)));
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ n);
    std::uniform_int_distribution<std::size_t> pick(0, size - 1);
    for (std::size_t s = 0; s < sample_count; ++s) {
      const std::size_t f = pick(rng);
      if (policy.status[f] == NashStatus::NoPureEquilibrium) continue;
      const double r = regret_at(next, lattice_.node(f), n, policy.first[f], policy.second[f]);
      diag.sampled_max_regret = std::max(diag.sampled_max_regret, r);
      ++diag.sampled_nodes;
    }

    next = std::move(current);
    if (options_.full_history || n == 0) solution.values_[n] = next;
  }
  return solution;
}

}  // namespace mcam
