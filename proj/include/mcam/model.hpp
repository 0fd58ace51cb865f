#pragma once

// Problem data for the two-insurer investment/reinsurance game and the model
// primitives evaluated on it: drift, diffusion, claim maps, premiums and
// utilities.
//
// Regimes are 0-based internally. Coefficient formulas that scale with the
// regime label (risky drift and volatility) use the 1-based label i+1.

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace mcam {

using Vec3 = std::array<double, 3>;

/// Continuous state (x1, x2, z): the two relative surpluses and the market index.
struct State {
  double x1 = 0.0;
  double x2 = 0.0;
  double z = 1.0;

  double surplus(std::size_t player) const { return player == 0 ? x1 : x2; }
  double& surplus(std::size_t player) { return player == 0 ? x1 : x2; }
};

enum class ReinsuranceMode { Proportional, ExcessOfLoss };

std::string to_string(ReinsuranceMode mode);
ReinsuranceMode parse_reinsurance_mode(const std::string& text);

constexpr std::size_t other_player(std::size_t player) { return 1 - player; }

struct RegimeGenerator {
  std::vector<std::vector<double>> rates;

  std::size_t size() const { return rates.size(); }
  double rate(std::size_t from, std::size_t to) const { return rates[from][to]; }
  /// Exit rate -q_ii.
  double exit_rate(std::size_t regime) const { return -rates[regime][regime]; }

  /// Appends invariant violations (square, nonnegative off-diagonals, zero row sums).
  void collect_violations(const std::string& path, std::vector<std::string>& out) const;
};

struct MarketCoefficients {
  std::vector<double> risk_free_rate;
  double risky_drift_scale = 0.0;
  double risky_vol_scale = 0.0;
  double index_drift_scale = 0.0;
  double index_vol_scale = 0.0;

  double rate(std::size_t regime) const { return risk_free_rate[regime]; }
  double risky_drift(std::size_t regime, double z) const {
    return risky_drift_scale * static_cast<double>(regime + 1) * z;
  }
  double risky_vol(std::size_t regime, double z) const {
    return risky_vol_scale * static_cast<double>(regime + 1) * z;
  }
  double index_drift(double t, double z) const { return index_drift_scale * (t + 1.0) * z; }
  double index_vol(double t, double z) const { return index_vol_scale * (t + 1.0) * z; }
};

struct InsurerSpec {
  std::vector<double> premium_rate;  // c_k per regime
  std::vector<double> claim_rate;    // lambda_k per regime
  double severity_rate = 1.0;        // theta, exponential claim law
  double risk_aversion = 1.0;        // eta
  double sensitivity = 0.0;          // kappa
  double loading = 0.0;              // l
  ReinsuranceMode mode = ReinsuranceMode::Proportional;
  /// Per-regime multiplier on claim magnitudes; empty means 1 in every regime.
  std::vector<double> claim_scale;

  double scale(std::size_t regime) const {
    return claim_scale.empty() ? 1.0 : claim_scale[regime];
  }
};

/// One player's half of a joint control: retention level and risky investment.
struct PlayerControl {
  double a = 1.0;
  double b = 0.0;

  friend bool operator==(const PlayerControl&, const PlayerControl&) = default;
};

struct JointControl {
  double a1 = 1.0;
  double b1 = 0.0;
  double a2 = 1.0;
  double b2 = 0.0;

  static JointControl from(const PlayerControl& first, const PlayerControl& second) {
    return {first.a, first.b, second.a, second.b};
  }
  PlayerControl player(std::size_t k) const { return k == 0 ? PlayerControl{a1, b1} : PlayerControl{a2, b2}; }
  double retention(std::size_t k) const { return k == 0 ? a1 : a2; }
  double investment(std::size_t k) const { return k == 0 ? b1 : b2; }

  friend bool operator==(const JointControl&, const JointControl&) = default;
};

struct GameSpec {
  RegimeGenerator generator;
  MarketCoefficients market;
  std::array<InsurerSpec, 2> insurers;
  double horizon = 1.0;
  /// Probability cut from the severity tail; also fixes the excess-of-loss scale.
  double severity_tail = 1e-6;

  std::size_t regimes() const { return generator.size(); }
  double total_claim_rate(std::size_t regime) const {
    return insurers[0].claim_rate[regime] + insurers[1].claim_rate[regime];
  }

  void collect_violations(const std::string& path, std::vector<std::string>& out) const;
  /// Throws ValidationError listing every invariant violation.
  void validate() const;
};

/// Swaps the roles of the two insurers.
GameSpec swap_insurers(const GameSpec& spec);
JointControl swap_players(const JointControl& u);

/// Upper severity quantile at 1-tail for an exponential law with rate theta.
double severity_quantile(double theta, double tail);

/// Currency value of retention level a = 1 under excess-of-loss for the given insurer and regime.
double excess_of_loss_scale(const GameSpec& spec, std::size_t player, std::size_t regime);

/// Drift vector (mu_1, mu_2, mu_Z) of the relative-surplus/index system.
Vec3 drift(const GameSpec& spec, const State& state, double t, std::size_t regime,
           const JointControl& u);

/// Diagonal volatility entries; the first two may be negative.
Vec3 diffusion(const GameSpec& spec, const State& state, double t, std::size_t regime,
               const JointControl& u);

/// Portion of a claim of size q paid by the primary insurer. `excess_scale`
/// converts a retention level in [0,1] to currency for excess-of-loss.
double claim_retained(ReinsuranceMode mode, double q, double a, double excess_scale);

/// Expectation-principle reinsurance premium rate g_k(a).
double reinsurance_premium(const InsurerSpec& ins, double a, std::size_t regime, double tail);

/// CARA utility -(1/eta) exp(-eta x); the exponent is clamped at 700.
double utility(const InsurerSpec& ins, double x);

struct SeverityAtom {
  double magnitude;
  double probability;
};

/// Discretizes the exponential severity law onto positive multiples of h.
std::vector<SeverityAtom> severity_atoms(const InsurerSpec& ins, double h, double tail);

}  // namespace mcam
