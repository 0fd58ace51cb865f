#include "mcam/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "mcam/errors.hpp"

namespace mcam {

namespace {

constexpr double kMultipleTolerance = 1e-9;
constexpr const char* kDimNames[3] = {"x1_bounds", "x2_bounds", "z_bounds"};

bool integer_multiple(double width, double step) {
  const double ratio = width / step;
  return std::abs(ratio - std::round(ratio)) <= kMultipleTolerance * std::max(1.0, ratio);
}

std::size_t floor_ratio(double num, double den) {
  return static_cast<std::size_t>(std::floor(num / den + kMultipleTolerance));
}

}  // namespace

void LatticeSpec::collect_violations(const std::string& path, std::vector<std::string>& out) const {
  if (!(h > 0.0)) out.push_back(path + ".h: must be > 0");
  if (!(time_step > 0.0)) out.push_back(path + ".time_step: must be > 0");
  if (h > 0.0 && time_step > 0.0 && horizon > 0.0 && floor_ratio(horizon, time_step) < 1) {
    out.push_back(path + ".time_step: horizon / time_step must be >= 1");
  }
  for (std::size_t d = 0; d < 3; ++d) {
    const std::string bpath = path + "." + kDimNames[d];
    const Interval& b = bounds[d];
    if (!(std::isfinite(b.lower) && std::isfinite(b.upper) && b.upper >= b.lower)) {
      out.push_back(bpath + ": need finite lower <= upper");
    } else if (h > 0.0 && !integer_multiple(b.upper - b.lower, h)) {
      out.push_back(bpath + ": width must be an integer multiple of h");
    }
  }
  if (!(bounds[2].lower > 0.0)) out.push_back(path + ".z_bounds: lower bound must be > 0");
  if (retention_levels < 2) out.push_back(path + ".retention_levels: must be >= 2");
  if (!(invest_step > 0.0)) {
    out.push_back(path + ".investment.step: must be > 0");
  } else if (!(invest_max >= invest_min) || !integer_multiple(invest_max - invest_min, invest_step)) {
    out.push_back(path + ".investment: (max - min) must be a nonnegative integer multiple of step");
  }
}

ControlSet::ControlSet(std::vector<double> retentions, std::vector<double> investments)
    : retentions_(std::move(retentions)), investments_(std::move(investments)) {
  if (retentions_.empty() || investments_.empty()) throw DomainError("empty control set");
}

ControlSet ControlSet::singleton(const PlayerControl& fixed) { return {{fixed.a}, {fixed.b}}; }

Lattice::Lattice(const LatticeSpec& spec, std::size_t regimes) : spec_(spec), regimes_(regimes) {
  std::vector<std::string> violations;
  spec_.collect_violations("lattice", violations);
  if (regimes_ == 0) violations.push_back("lattice: need at least one regime");
  if (!violations.empty()) throw ValidationError(std::move(violations));

  steps_ = floor_ratio(spec_.horizon, spec_.time_step);
  for (std::size_t d = 0; d < 3; ++d) {
    const auto& b = spec_.bounds[d];
    counts_[d] = static_cast<std::size_t>(std::llround((b.upper - b.lower) / spec_.h)) + 1;
  }
  strides_ = {counts_[1] * counts_[2], counts_[2], 1};
}

NodeIndex Lattice::node(std::size_t flat_index) const {
  NodeIndex out;
  out.regime = flat_index / spatial_size();
  std::size_t rest = flat_index % spatial_size();
  for (std::size_t d = 0; d < 3; ++d) {
    out.j[d] = rest / strides_[d];
    rest %= strides_[d];
  }
  return out;
}

bool Lattice::valid(const NodeIndex& node) const {
  return node.regime < regimes_ && node.j[0] < counts_[0] && node.j[1] < counts_[1] &&
         node.j[2] < counts_[2];
}

State Lattice::node_to_state(const NodeIndex& node) const {
  if (!valid(node)) throw DomainError("node index outside the lattice");
  return {coordinate(0, node.j[0]), coordinate(1, node.j[1]), coordinate(2, node.j[2])};
}

std::size_t Lattice::nearest_index(std::size_t dim, double value) const {
  const double s = (value - spec_.bounds[dim].lower) / spec_.h;
  if (!(s > 0.0)) return 0;  // also catches NaN
  const double top = static_cast<double>(counts_[dim] - 1);
  if (s >= top) return counts_[dim] - 1;
  // Ties (s = k + 1/2) round toward the lower bound.
  return static_cast<std::size_t>(std::ceil(s - 0.5 - kMultipleTolerance));
}

NodeIndex Lattice::state_to_nearest_node(const State& state, std::size_t regime) const {
  NodeIndex out;
  out.regime = regime;
  out.j = {nearest_index(0, state.x1), nearest_index(1, state.x2), nearest_index(2, state.z)};
  return out;
}

bool Lattice::contains(std::size_t dim, double value) const {
  const double slack = kMultipleTolerance * spec_.h;
  return value >= spec_.bounds[dim].lower - slack && value <= spec_.bounds[dim].upper + slack;
}

std::vector<double> Lattice::retention_levels() const {
  std::vector<double> out(spec_.retention_levels);
  const double denom = static_cast<double>(spec_.retention_levels - 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(i) / denom;
  return out;
}

std::vector<double> Lattice::investment_levels() const {
  const auto n = static_cast<std::size_t>(
      std::llround((spec_.invest_max - spec_.invest_min) / spec_.invest_step)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = spec_.invest_min + static_cast<double>(i) * spec_.invest_step;
  }
  return out;
}

std::vector<JointControl> Lattice::control_grid() const {
  const ControlSet set = control_set();
  std::vector<JointControl> out;
  out.reserve(set.size() * set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t k = 0; k < set.size(); ++k) out.push_back(JointControl::from(set.at(i), set.at(k)));
  }
  return out;
}

}  // namespace mcam
