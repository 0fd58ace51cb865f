#include "mcam/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcam/errors.hpp"
#include "mcam/parallel.hpp"
#include "mcam/solver.hpp"

namespace mcam {

std::size_t RegimePath::at(double t) const {
  const auto it = std::upper_bound(starts.begin(), starts.end(), t);
  return regimes[it == starts.begin() ? 0 : static_cast<std::size_t>(it - starts.begin()) - 1];
}

double RegimePath::occupation(std::size_t regime) const {
  double total = 0.0;
  for (std::size_t m = 0; m < starts.size(); ++m) {
    if (regimes[m] != regime) continue;
    const double end = m + 1 < starts.size() ? starts[m + 1] : horizon;
    total += end - starts[m];
  }
  return total;
}

RegimePath simulate_regime_path(const RegimeGenerator& generator, double horizon,
                                std::size_t initial, std::mt19937_64& rng) {
  if (initial >= generator.size()) throw DomainError("initial regime outside the generator");
  RegimePath path;
  path.horizon = horizon;
  path.starts.push_back(0.0);
  path.regimes.push_back(initial);

  std::size_t current = initial;
  double t = 0.0;
  std::vector<double> weights(generator.size());
  while (true) {
    const double exit = generator.exit_rate(current);
    if (!(exit > 0.0)) break;  // absorbing
    t += std::exponential_distribution<double>(exit)(rng);
    if (t >= horizon) break;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      weights[j] = j == current ? 0.0 : generator.rate(current, j);
    }
    current = std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
    path.starts.push_back(t);
    path.regimes.push_back(current);
  }
  return path;
}

RegimePath simulate_regime_path(const RegimeGenerator& generator, double horizon,
                                std::size_t initial, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return simulate_regime_path(generator, horizon, initial, rng);
}

FeedbackPolicy constant_policy(const JointControl& u) {
  return [u](double, const State&, std::size_t) { return u; };
}

FeedbackPolicy solution_policy(const Solution& solution) {
  return [&solution](double t, const State& s, std::size_t regime) {
    return solution.extract_policy(t, s, regime);
  };
}

void SimConfig::collect_violations(const std::string& path, double horizon,
                                   std::vector<std::string>& out) const {
  if (path_count < 1) out.push_back(path + ".path_count: must be >= 1");
  if (!(euler_step > 0.0)) {
    out.push_back(path + ".euler_step: must be > 0");
  } else if (horizon > 0.0) {
    const double steps = std::round(horizon / euler_step);
    if (steps < 1.0 || std::abs(steps * euler_step - horizon) > 1e-12 * std::max(1.0, horizon)) {
      out.push_back(path + ".euler_step: must divide the horizon");
    }
  }
}

namespace {

struct ClaimEvent {
  double time;
  std::size_t insurer;
  double size;
};

std::vector<ClaimEvent> claim_events(const GameSpec& spec, const RegimePath& regimes,
                                     std::mt19937_64& rng) {
  std::vector<ClaimEvent> events;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < 2; ++k) {
    const InsurerSpec& ins = spec.insurers[k];
    const double rate_max = *std::max_element(ins.claim_rate.begin(), ins.claim_rate.end());
    if (!(rate_max > 0.0)) continue;
    std::exponential_distribution<double> gap(rate_max);
    std::exponential_distribution<double> severity(ins.severity_rate);
    for (double t = gap(rng); t < spec.horizon; t += gap(rng)) {
      const std::size_t i = regimes.at(t);
      const double accept = unit(rng);
      const double size = ins.scale(i) * severity(rng);
      if (accept < ins.claim_rate[i] / rate_max) events.push_back({t, k, size});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const ClaimEvent& a, const ClaimEvent& b) { return a.time < b.time; });
  return events;
}

void clamp(State& s, const std::optional<std::array<Interval, 3>>& bounds) {
  if (!bounds) return;
  s.x1 = std::clamp(s.x1, (*bounds)[0].lower, (*bounds)[0].upper);
  s.x2 = std::clamp(s.x2, (*bounds)[1].lower, (*bounds)[1].upper);
  s.z = std::clamp(s.z, (*bounds)[2].lower, (*bounds)[2].upper);
}

bool finite(const State& s) {
  return std::isfinite(s.x1) && std::isfinite(s.x2) && std::isfinite(s.z);
}

}  // namespace

PathResult simulate_path(const GameSpec& spec, const FeedbackPolicy& policy, const State& initial,
                         std::size_t regime, const SimConfig& config, std::mt19937_64& rng) {
  const double horizon = spec.horizon;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / config.euler_step));
  const RegimePath regimes = simulate_regime_path(spec.generator, horizon, regime, rng);
  const std::vector<ClaimEvent> events = claim_events(spec, regimes, rng);

  PathResult out;
  State s = initial;
  clamp(s, config.bounds);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t next_event = 0;
  for (std::size_t m = 0; m < steps; ++m) {
    const double t = static_cast<double>(m) * config.euler_step;
    const double t_next = m + 1 == steps ? horizon : static_cast<double>(m + 1) * config.euler_step;
    const double dt = t_next - t;
    const std::size_t i = regimes.at(t);
    const JointControl u = policy(t, s, i);
    const Vec3 mu = drift(spec, s, t, i, u);
    const Vec3 sigma = diffusion(spec, s, t, i, u);
    const double dw_s = std::sqrt(dt) * normal(rng);
    const double dw_z = std::sqrt(dt) * normal(rng);
    s.x1 += mu[0] * dt + sigma[0] * dw_s;
    s.x2 += mu[1] * dt + sigma[1] * dw_s;
    s.z += mu[2] * dt + sigma[2] * dw_z;
    clamp(s, config.bounds);

    for (; next_event < events.size() && events[next_event].time < t_next; ++next_event) {
      const ClaimEvent& e = events[next_event];
      const std::size_t k = e.insurer;
      const std::size_t l = other_player(k);
      const std::size_t at = regimes.at(e.time);
      const double retained = claim_retained(spec.insurers[k].mode, e.size, u.retention(k),
                                             excess_of_loss_scale(spec, k, at));
      s.surplus(k) -= retained;
      s.surplus(l) += spec.insurers[l].sensitivity * retained;
      ++out.claims[k];
      clamp(s, config.bounds);
    }
    if (!finite(s)) throw SimulationError("nonfinite state at Euler step " + std::to_string(m), m);
  }
  out.terminal = s;
  out.final_regime = regimes.at(horizon);
  return out;
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<PathResult> simulate_paths(const GameSpec& spec, const FeedbackPolicy& policy,
                                       const State& initial, std::size_t regime,
                                       const SimConfig& config, std::size_t workers) {
  std::vector<std::string> violations;
  config.collect_violations("simulation", spec.horizon, violations);
  if (regime >= spec.regimes()) violations.push_back("simulation: initial regime out of range");
  if (!violations.empty()) throw ValidationError(std::move(violations));

  std::vector<PathResult> out(config.path_count);
  parallel_for(config.path_count, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::mt19937_64 rng = path_rng(config.seed, p);
      try {
        out[p] = simulate_path(spec, policy, initial, regime, config, rng);
      } catch (const SimulationError& e) {
        throw SimulationError("path " + std::to_string(p) + " (seed " +
                                  std::to_string(config.seed) + "): " + e.what(),
                              e.step());
      }
    }
  });
  return out;
}

std::array<ValueEstimate, 2> summarize(const GameSpec& spec, const std::vector<PathResult>& paths) {
  std::array<ValueEstimate, 2> out;
  const auto n = static_cast<double>(paths.size());
  for (std::size_t k = 0; k < 2; ++k) {
    out[k].path_count = paths.size();
    if (paths.empty()) continue;
    double sum = 0.0;
    for (const auto& p : paths) sum += utility(spec.insurers[k], p.terminal.surplus(k));
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& p : paths) {
      const double d = utility(spec.insurers[k], p.terminal.surplus(k)) - mean;
      sq += d * d;
    }
    out[k].mean = mean;
    out[k].standard_error = paths.size() > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0;
  }
  return out;
}

std::array<ValueEstimate, 2> estimate_value(const GameSpec& spec, const FeedbackPolicy& policy,
                                            const State& initial, std::size_t regime,
                                            const SimConfig& config, std::size_t workers) {
  return summarize(spec, simulate_paths(spec, policy, initial, regime, config, workers));
}

}  // namespace mcam
