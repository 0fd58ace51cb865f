#include "mcam/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcam/errors.hpp"

namespace mcam {

namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr double kMaxUtilityExponent = 700.0;

void check_regime(const GameSpec& spec, std::size_t regime) {
  if (regime >= spec.regimes()) {
    std::ostringstream os;
    os << "regime index " << regime << " outside [0, " << spec.regimes() << ")";
    throw DomainError(os.str());
  }
}

void check_per_regime(const std::string& path, const std::vector<double>& values, std::size_t m,
                      std::vector<std::string>& out) {
  if (values.size() != m) {
    std::ostringstream os;
    os << path << ": expected " << m << " entries (one per regime), got " << values.size();
    out.push_back(os.str());
  }
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::string to_string(ReinsuranceMode mode) {
  return mode == ReinsuranceMode::Proportional ? "proportional" : "excess_of_loss";
}

ReinsuranceMode parse_reinsurance_mode(const std::string& text) {
  if (text == "proportional") return ReinsuranceMode::Proportional;
  if (text == "excess_of_loss") return ReinsuranceMode::ExcessOfLoss;
  throw DomainError("unknown reinsurance mode '" + text + "'");
}

void RegimeGenerator::collect_violations(const std::string& path,
                                         std::vector<std::string>& out) const {
  if (rates.empty()) {
    out.push_back(path + ": generator must have at least one regime");
    return;
  }
  const std::size_t m = rates.size();
  for (std::size_t i = 0; i < m; ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (rates[i].size() != m) {
      out.push_back(row_path + ": row length " + std::to_string(rates[i].size()) +
                    " differs from regime count " + std::to_string(m));
      continue;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      sum += rates[i][j];
      if (j != i && !(rates[i][j] >= 0.0)) {
        out.push_back(row_path + "[" + std::to_string(j) + "]: off-diagonal rate must be >= 0");
      }
    }
    if (!(std::abs(sum) <= kRowSumTolerance)) {
      std::ostringstream os;
      os << row_path << ": row sums to " << sum << ", expected 0";
      out.push_back(os.str());
    }
  }
}

void GameSpec::collect_violations(const std::string& path, std::vector<std::string>& out) const {
  generator.collect_violations(path + ".generator_per_time", out);
  const std::size_t m = generator.size();

  if (!(horizon > 0.0)) out.push_back(path + ".horizon: must be > 0");
  if (!(severity_tail > 0.0 && severity_tail < 1.0)) {
    out.push_back(path + ".severity_tail_probability: must lie in (0, 1)");
  }

  const std::string mpath = path + ".market";
  check_per_regime(mpath + ".risk_free_rate_per_time", market.risk_free_rate, m, out);
  if (!(market.risky_vol_scale > 0.0)) out.push_back(mpath + ".risky_vol_scale: must be > 0");
  if (!(market.index_vol_scale > 0.0)) out.push_back(mpath + ".index_vol_scale: must be > 0");

  for (std::size_t k = 0; k < 2; ++k) {
    const InsurerSpec& ins = insurers[k];
    const std::string ipath = path + ".insurers[" + std::to_string(k) + "]";
    check_per_regime(ipath + ".premium_rate_per_time", ins.premium_rate, m, out);
    check_per_regime(ipath + ".claim_rate_per_time", ins.claim_rate, m, out);
    for (std::size_t i = 0; i < ins.claim_rate.size(); ++i) {
      if (!(ins.claim_rate[i] >= 0.0)) {
        out.push_back(ipath + ".claim_rate_per_time[" + std::to_string(i) + "]: must be >= 0");
      }
    }
    if (!ins.claim_scale.empty()) {
      check_per_regime(ipath + ".claim_scale", ins.claim_scale, m, out);
      for (std::size_t i = 0; i < ins.claim_scale.size(); ++i) {
        if (!(ins.claim_scale[i] > 0.0)) {
          out.push_back(ipath + ".claim_scale[" + std::to_string(i) + "]: must be > 0");
        }
      }
    }
    if (!(ins.severity_rate > 0.0)) out.push_back(ipath + ".severity_rate_per_currency: must be > 0");
    if (!(ins.risk_aversion > 0.0)) out.push_back(ipath + ".risk_aversion_per_currency: must be > 0");
    if (!(ins.sensitivity >= 0.0 && ins.sensitivity <= 1.0)) {
      out.push_back(ipath + ".sensitivity: must lie in [0, 1]");
    }
    if (!(ins.loading >= 0.0)) out.push_back(ipath + ".loading: must be >= 0");
  }
  if (insurers[0].mode != insurers[1].mode) {
    out.push_back(path + ".insurers: both insurers must use the same reinsurance mode");
  }
}

void GameSpec::validate() const {
  std::vector<std::string> violations;
  collect_violations("game", violations);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

GameSpec swap_insurers(const GameSpec& spec) {
  GameSpec out = spec;
  std::swap(out.insurers[0], out.insurers[1]);
  return out;
}

JointControl swap_players(const JointControl& u) { return {u.a2, u.b2, u.a1, u.b1}; }

double severity_quantile(double theta, double tail) { return -std::log(tail) / theta; }

double excess_of_loss_scale(const GameSpec& spec, std::size_t player, std::size_t regime) {
  const InsurerSpec& ins = spec.insurers[player];
  return ins.scale(regime) * severity_quantile(ins.severity_rate, spec.severity_tail);
}

Vec3 drift(const GameSpec& spec, const State& state, double t, std::size_t regime,
           const JointControl& u) {
  check_regime(spec, regime);
  const MarketCoefficients& mk = spec.market;
  const double r = mk.rate(regime);
  const double excess_return = mk.risky_drift(regime, state.z) - r;

  Vec3 out{};
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t l = other_player(k);
    const InsurerSpec& own = spec.insurers[k];
    const InsurerSpec& opp = spec.insurers[l];
    const double kappa = own.sensitivity;
    const double g_own = reinsurance_premium(own, u.retention(k), regime, spec.severity_tail);
    const double g_opp = reinsurance_premium(opp, u.retention(l), regime, spec.severity_tail);
    out[k] = r * state.surplus(k) + (u.investment(k) - kappa * u.investment(l)) * excess_return +
             own.premium_rate[regime] - kappa * opp.premium_rate[regime] - g_own + kappa * g_opp;
  }
  out[2] = mk.index_drift(t, state.z);
  return out;
}

Vec3 diffusion(const GameSpec& spec, const State& state, double t, std::size_t regime,
               const JointControl& u) {
  check_regime(spec, regime);
  const double vol = spec.market.risky_vol(regime, state.z);
  const double k1 = spec.insurers[0].sensitivity;
  const double k2 = spec.insurers[1].sensitivity;
  return {(u.b1 - k1 * u.b2) * vol, (u.b2 - k2 * u.b1) * vol, spec.market.index_vol(t, state.z)};
}

double claim_retained(ReinsuranceMode mode, double q, double a, double excess_scale) {
  if (!(q >= 0.0)) throw DomainError("claim size must be nonnegative");
  if (mode == ReinsuranceMode::Proportional) return a * q;
  return std::min(q, a * excess_scale);
}

double reinsurance_premium(const InsurerSpec& ins, double a, std::size_t regime, double tail) {
  const double mean_claim = ins.scale(regime) / ins.severity_rate;
  if (ins.mode == ReinsuranceMode::Proportional) {
    return (1.0 + ins.loading) * (1.0 - a) * mean_claim;
  }
  // E[(A - a Qmax)^+] for exponential A with Qmax the (1-tail) quantile.
  const double level = a * severity_quantile(ins.severity_rate, tail);
  return (1.0 + ins.loading) * mean_claim * std::exp(-ins.severity_rate * level);
}

double utility(const InsurerSpec& ins, double x) {
  const double exponent = std::min(-ins.risk_aversion * x, kMaxUtilityExponent);
  return -std::exp(exponent) / ins.risk_aversion;
}

std::vector<SeverityAtom> severity_atoms(const InsurerSpec& ins, double h, double tail) {
  if (!(h > 0.0)) throw DomainError("severity atoms need h > 0");
  if (!(tail > 0.0 && tail < 1.0)) throw DomainError("severity tail probability must lie in (0, 1)");

  const double theta = ins.severity_rate;
  const double quantile = severity_quantile(theta, tail);
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(quantile / h)));

  // P(A <= y) for the exponential law, computed without cancellation.
  auto cdf = [theta](double y) { return -std::expm1(-theta * y); };

  std::vector<SeverityAtom> atoms;
  atoms.reserve(count);
  double total = 0.0;
  for (std::size_t j = 1; j <= count; ++j) {
    const double lo = j == 1 ? 0.0 : (static_cast<double>(j) - 0.5) * h;
    const double hi = (static_cast<double>(j) + 0.5) * h;
    const double mass = cdf(hi) - cdf(lo);
    atoms.push_back({static_cast<double>(j) * h, mass});
    total += mass;
  }
  for (auto& atom : atoms) atom.probability /= total;
  return atoms;
}

}  // namespace mcam
