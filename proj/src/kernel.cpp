#include "mcam/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "mcam/errors.hpp"

namespace mcam {

namespace {

std::string describe_violation(const NodeIndex& node, double t, const JointControl& u,
                               std::size_t player, double self, double max_step) {
  std::ostringstream os;
  os.precision(6);
  os << "CFL violation: self-transition probability " << self << " < 0 for player "
     << player + 1 << " at node (" << node.j[0] << ", " << node.j[1] << ", " << node.j[2]
     << ", regime " << node.regime + 1 << "), t=" << t << ", control (a1=" << u.a1
     << ", b1=" << u.b1 << ", a2=" << u.a2 << ", b2=" << u.b2
     << "); maximal admissible time step for this h is " << max_step;
  return os.str();
}

}  // namespace

LocalWeights local_weights(const GameSpec& spec, const State& state, double t, std::size_t regime,
                           const JointControl& u, std::size_t player, double h, double delta) {
  const Vec3 mu = drift(spec, state, t, regime, u);
  const Vec3 sigma = diffusion(spec, state, t, regime, u);

  LocalWeights w;
  w.drift_own = mu[player];
  w.drift_index = mu[2];
  w.variance_own = sigma[player] * sigma[player];
  w.variance_index = sigma[2] * sigma[2];

  const double dh = delta / h;
  const double dh2 = delta / (2.0 * h * h);
  w.up_x = dh * std::max(w.drift_own, 0.0) + dh2 * w.variance_own;
  w.down_x = dh * std::max(-w.drift_own, 0.0) + dh2 * w.variance_own;
  w.up_z = dh * std::max(w.drift_index, 0.0) + dh2 * w.variance_index;
  w.down_z = dh * std::max(-w.drift_index, 0.0) + dh2 * w.variance_index;
  w.switching = spec.generator.exit_rate(regime) * delta;
  w.self = 1.0 - w.switching - dh * (std::abs(w.drift_own) + std::abs(w.drift_index)) -
           2.0 * dh2 * (w.variance_own + w.variance_index);
  return w;
}

double max_admissible_time_step(const LocalWeights& w, double h, double delta) {
  const double rate = w.switching / delta + (std::abs(w.drift_own) + std::abs(w.drift_index)) / h +
                      (w.variance_own + w.variance_index) / (h * h);
  return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

CflViolation::CflViolation(NodeIndex node_, double t, JointControl control_, std::size_t player_,
                           double self_probability_, double max_time_step_)
    : std::runtime_error(
          describe_violation(node_, t, control_, player_, self_probability_, max_time_step_)),
      node(node_),
      time(t),
      control(control_),
      player(player_),
      self_probability(self_probability_),
      max_time_step(max_time_step_) {}

double Stencil::total() const {
  double sum = self_probability;
  for (const auto& e : entries) sum += e.probability;
  return sum;
}

Stencil diffusion_stencil(const GameSpec& spec, const Lattice& lattice, const NodeIndex& node,
                          double t, const JointControl& u, std::size_t player) {
  const State state = lattice.node_to_state(node);
  const LocalWeights w =
      local_weights(spec, state, t, node.regime, u, player, lattice.h(), lattice.time_step());
  if (w.self < 0.0) {
    throw CflViolation(node, t, u, player, w.self,
                       max_admissible_time_step(w, lattice.h(), lattice.time_step()));
  }

  Stencil out;
  out.self_probability = w.self;
  auto push = [&](std::size_t dim, bool up, double p) {
    if (p == 0.0) return;
    const std::size_t j = node.j[dim];
    const bool clamped = up ? j + 1 >= lattice.count(dim) : j == 0;
    if (clamped) {
      out.self_probability += p;
      return;
    }
    NodeIndex target = node;
    target.j[dim] = up ? j + 1 : j - 1;
    out.entries.push_back({target, p});
  };
  push(player, true, w.up_x);
  push(player, false, w.down_x);
  push(2, true, w.up_z);
  push(2, false, w.down_z);
  for (std::size_t j = 0; j < spec.regimes(); ++j) {
    if (j == node.regime) continue;
    const double p = spec.generator.rate(node.regime, j) * lattice.time_step();
    if (p == 0.0) continue;
    NodeIndex target = node;
    target.regime = j;
    out.entries.push_back({target, p});
  }
  return out;
}

ClaimWeights claim_weights(const GameSpec& spec, std::size_t regime, double delta) {
  ClaimWeights w;
  for (std::size_t k = 0; k < 2; ++k) w.claim[k] = spec.insurers[k].claim_rate[regime] * delta;
  w.no_claim = 1.0 - (w.claim[0] + w.claim[1]);
  return w;
}

JumpMixture jump_mixture(const GameSpec& spec, std::size_t regime) {
  if (regime >= spec.regimes()) throw DomainError("regime index outside the generator");
  const double total = spec.total_claim_rate(regime);
  if (!(total > 0.0)) throw DomainError("total claim rate must be positive");
  return {total, spec.insurers[0].claim_rate[regime] / total};
}

namespace {

/// Target index along `dim` after moving x by `shift` (rounded to the grid, clamped).
std::size_t shifted_index(const Lattice& lattice, std::size_t dim, std::size_t source, double shift) {
  return lattice.nearest_index(dim, lattice.coordinate(dim, source) + shift);
}

}  // namespace

std::vector<StencilEntry> jump_targets(const GameSpec& spec, const Lattice& lattice,
                                       const NodeIndex& node, const JointControl& u,
                                       std::size_t player) {
  if (!lattice.valid(node)) throw DomainError("node index outside the lattice");
  const JumpMixture mix = jump_mixture(spec, node.regime);
  const std::size_t opp = other_player(player);
  const ReinsuranceMode mode = spec.insurers[player].mode;

  std::map<std::size_t, double> merged;
  const auto add = [&](std::size_t claimant, double sign_factor, double weight) {
    if (weight == 0.0) return;
    const InsurerSpec& ins = spec.insurers[claimant];
    const double scale = ins.scale(node.regime);
    const double excess = excess_of_loss_scale(spec, claimant, node.regime);
    for (const auto& atom : severity_atoms(ins, lattice.h(), spec.severity_tail)) {
      const double retained = claim_retained(mode, scale * atom.magnitude, u.retention(claimant), excess);
      const std::size_t j = shifted_index(lattice, player, node.j[player], sign_factor * retained);
      merged[j] += weight * atom.probability;
    }
  };
  add(player, -1.0, mix.from(player));
  add(opp, spec.insurers[player].sensitivity, mix.from(opp));

  std::vector<StencilEntry> out;
  out.reserve(merged.size());
  for (const auto& [j, p] : merged) {
    NodeIndex target = node;
    target.j[player] = j;
    out.push_back({target, p});
  }
  return out;
}

JumpKernel::Table JumpKernel::build(const GameSpec& spec, const Lattice& lattice, std::size_t dim,
                                    std::size_t claimant, const std::vector<double>& retentions,
                                    double factor) {
  const InsurerSpec& ins = spec.insurers[claimant];
  const auto atoms = severity_atoms(ins, lattice.h(), spec.severity_tail);

  Table t;
  t.levels = retentions.size();
  t.sources = lattice.count(dim);
  t.offsets.push_back(0);
  std::vector<double> mass(t.sources);
  for (std::size_t regime = 0; regime < spec.regimes(); ++regime) {
    const double scale = ins.scale(regime);
    const double excess = excess_of_loss_scale(spec, claimant, regime);
    for (const double a : retentions) {
      for (std::size_t source = 0; source < t.sources; ++source) {
        std::fill(mass.begin(), mass.end(), 0.0);
        for (const auto& atom : atoms) {
          const double retained = claim_retained(ins.mode, scale * atom.magnitude, a, excess);
          mass[shifted_index(lattice, dim, source, factor * retained)] += atom.probability;
        }
        for (std::size_t j = 0; j < t.sources; ++j) {
          if (mass[j] > 0.0) t.entries.push_back({static_cast<std::uint32_t>(j), mass[j]});
        }
        t.offsets.push_back(t.entries.size());
      }
    }
  }
  return t;
}

JumpKernel::JumpKernel(const GameSpec& spec, const Lattice& lattice, const ControlSet& first,
                       const ControlSet& second) {
  const std::array<const ControlSet*, 2> sets{&first, &second};
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t l = other_player(k);
    own_[k] = build(spec, lattice, k, k, sets[k]->retentions(), -1.0);
    opp_[k] = build(spec, lattice, k, l, sets[l]->retentions(), spec.insurers[k].sensitivity);
  }
}

CflReport cfl_scan(const GameSpec& spec, const Lattice& lattice, const ControlSet& first,
                   const ControlSet& second) {
  const double h = lattice.h();
  const double delta = lattice.time_step();

  std::vector<double> times;
  for (std::size_t n = 0; n < lattice.steps(); ++n) times.push_back(lattice.time_of(n));
  const std::size_t slice_count = times.size();
  times.push_back(spec.horizon);  // only feeds the admissible-step bound

  CflReport report;
  report.max_time_step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.regimes(); ++i) {
    report.max_claim_rate = std::max(report.max_claim_rate, spec.total_claim_rate(i));
  }

  NodeIndex node;
  for (node.regime = 0; node.regime < spec.regimes(); ++node.regime) {
    for (std::size_t jz = 0; jz < lattice.count(2); ++jz) {
      node.j[2] = jz;
      for (std::size_t n = 0; n < times.size(); ++n) {
        const double t = times[n];
        for (std::size_t c1 = 0; c1 < first.size(); ++c1) {
          for (std::size_t c2 = 0; c2 < second.size(); ++c2) {
            const JointControl u = JointControl::from(first.at(c1), second.at(c2));
            for (std::size_t k = 0; k < 2; ++k) {
              for (const std::size_t jk : {std::size_t{0}, lattice.count(k) - 1}) {
                node.j = {0, 0, jz};
                node.j[k] = jk;
                const State s = lattice.node_to_state(node);
                const LocalWeights w = local_weights(spec, s, t, node.regime, u, k, h, delta);
                report.max_time_step =
                    std::min(report.max_time_step, max_admissible_time_step(w, h, delta));
                if (n >= slice_count) continue;
                report.max_abs_drift = std::max(
                    {report.max_abs_drift, std::abs(w.drift_own), std::abs(w.drift_index)});
                if (w.self < report.worst_self_probability) {
                  report.worst_self_probability = w.self;
                  report.worst_node = node;
                  report.worst_time = t;
                  report.worst_control = u;
                  report.worst_player = k;
                }
              }
            }
          }
        }
      }
    }
  }
  return report;
}

void require_cfl(const CflReport& report) {
  if (report.ok()) return;
  throw CflViolation(report.worst_node, report.worst_time, report.worst_control,
                     report.worst_player, report.worst_self_probability, report.max_time_step);
}

std::vector<ConsistencySample> random_consistency_samples(const Lattice& lattice,
                                                          const ControlSet& first,
                                                          const ControlSet& second,
                                                          std::size_t count,
                                                          std::uint64_t seed) {
  for (std::size_t d = 0; d < 3; ++d) {
    if (lattice.count(d) < 3) throw DomainError("lattice has no interior nodes to sample");
  }
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::vector<ConsistencySample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    ConsistencySample sample;
    for (std::size_t d = 0; d < 3; ++d) sample.node.j[d] = pick(1, lattice.count(d) - 2);
    sample.node.regime = pick(0, lattice.regimes() - 1);
    sample.slice = pick(0, lattice.steps() - 1);
    sample.control = JointControl::from(first.at(pick(0, first.size() - 1)),
                                        second.at(pick(0, second.size() - 1)));
    sample.player = pick(0, 1);
    out.push_back(sample);
  }
  return out;
}

ConsistencyReport check_local_consistency(const GameSpec& spec, const Lattice& lattice,
                                          const std::vector<ConsistencySample>& samples,
                                          double coefficient_bound) {
  const double h = lattice.h();
  const double delta = lattice.time_step();

  ConsistencyReport report;
  report.coefficient_bound = coefficient_bound;
  report.variance_tolerance = coefficient_bound * delta * (h + delta);

  for (const auto& sample : samples) {
    const std::size_t k = sample.player;
    if (!lattice.interior(sample.node, k) || !lattice.interior(sample.node, 2)) {
      ++report.skipped_boundary;
      continue;
    }
    const double t = lattice.time_of(sample.slice);
    const Stencil stencil = diffusion_stencil(spec, lattice, sample.node, t, sample.control, k);
    const State origin = lattice.node_to_state(sample.node);

    // Moments of (dx_k, dz); the origin and regime switches contribute zero displacement.
    double mean_x = 0.0, mean_z = 0.0, sq_x = 0.0, sq_z = 0.0, cross = 0.0;
    for (const auto& e : stencil.entries) {
      const State target = lattice.node_to_state(e.target);
      const double dx = target.surplus(k) - origin.surplus(k);
      const double dz = target.z - origin.z;
      mean_x += e.probability * dx;
      mean_z += e.probability * dz;
      sq_x += e.probability * dx * dx;
      sq_z += e.probability * dz * dz;
      cross += e.probability * dx * dz;
    }
    const Vec3 mu = drift(spec, origin, t, sample.node.regime, sample.control);
    const Vec3 sigma = diffusion(spec, origin, t, sample.node.regime, sample.control);

    ConsistencyRow row;
    row.sample = sample;
    row.self_probability = stencil.self_probability;
    row.mean_error_own = std::abs(mean_x - mu[k] * delta);
    row.mean_error_index = std::abs(mean_z - mu[2] * delta);
    const double var_x = sq_x - mean_x * mean_x;
    const double var_z = sq_z - mean_z * mean_z;
    const double cov = cross - mean_x * mean_z;
    row.variance_error = std::max({std::abs(var_x - sigma[k] * sigma[k] * delta),
                                   std::abs(var_z - sigma[2] * sigma[2] * delta), std::abs(cov)});
    row.variance_bound = report.variance_tolerance;

    report.mean_error[k] = std::max(report.mean_error[k], row.mean_error_own);
    report.mean_error[2] = std::max(report.mean_error[2], row.mean_error_index);
    report.variance_error = std::max(report.variance_error, row.variance_error);
    report.cfl_margin = std::min(report.cfl_margin, stencil.self_probability);
    report.rows.push_back(row);
  }
  return report;
}

double consistency_coefficient(const CflReport& report) {
  return std::max(report.max_abs_drift, report.max_abs_drift * report.max_abs_drift);
}

}  // namespace mcam
