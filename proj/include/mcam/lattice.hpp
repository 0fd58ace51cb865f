#pragma once

// Truncated state lattice, time discretization and control grids.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mcam/model.hpp"

namespace mcam {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct LatticeSpec {
  double h = 0.2;
  double time_step = 0.04;
  double horizon = 1.0;
  std::array<Interval, 3> bounds{};  // x1, x2, z
  std::size_t retention_levels = 2;
  double invest_min = 0.0;
  double invest_max = 0.0;
  double invest_step = 1.0;

  void collect_violations(const std::string& path, std::vector<std::string>& out) const;
};

struct NodeIndex {
  std::array<std::size_t, 3> j{};  // x1, x2, z coordinates
  std::size_t regime = 0;

  friend bool operator==(const NodeIndex&, const NodeIndex&) = default;
};

/// Ordered set of one player's admissible controls, lexicographic in (a, b).
class ControlSet {
 public:
  ControlSet(std::vector<double> retentions, std::vector<double> investments);
  static ControlSet singleton(const PlayerControl& fixed);

  std::size_t size() const { return retentions_.size() * investments_.size(); }
  PlayerControl at(std::size_t index) const {
    return {retentions_[index / investments_.size()], investments_[index % investments_.size()]};
  }
  std::size_t retention_index(std::size_t index) const { return index / investments_.size(); }
  const std::vector<double>& retentions() const { return retentions_; }
  const std::vector<double>& investments() const { return investments_; }

 private:
  std::vector<double> retentions_;
  std::vector<double> investments_;
};

class Lattice {
 public:
  /// Validates the spec; throws ValidationError.
  explicit Lattice(const LatticeSpec& spec, std::size_t regimes);

  const LatticeSpec& spec() const { return spec_; }
  double h() const { return spec_.h; }
  double time_step() const { return spec_.time_step; }
  /// Number of time steps N = floor(T / delta).
  std::size_t steps() const { return steps_; }
  double time_of(std::size_t slice) const { return static_cast<double>(slice) * spec_.time_step; }

  std::size_t regimes() const { return regimes_; }
  std::size_t count(std::size_t dim) const { return counts_[dim]; }
  /// Nodes per regime.
  std::size_t spatial_size() const { return counts_[0] * counts_[1] * counts_[2]; }
  std::size_t size() const { return spatial_size() * regimes_; }
  std::size_t stride(std::size_t dim) const { return strides_[dim]; }

  std::size_t flat(const NodeIndex& node) const {
    return node.regime * spatial_size() + node.j[0] * strides_[0] + node.j[1] * strides_[1] +
           node.j[2] * strides_[2];
  }
  NodeIndex node(std::size_t flat_index) const;
  bool valid(const NodeIndex& node) const;
  /// True when no coordinate sits on the lattice boundary in the given dims.
  bool interior(const NodeIndex& node, std::size_t dim) const {
    return node.j[dim] > 0 && node.j[dim] + 1 < counts_[dim];
  }

  double coordinate(std::size_t dim, std::size_t j) const {
    // interpolate between the endpoints so symmetric grids hit 0 exactly
    const Interval& b = spec_.bounds[dim];
    const double last = static_cast<double>(counts_[dim] - 1);
    if (last == 0.0) return b.lower;
    const double jj = static_cast<double>(j);
    return (b.lower * (last - jj) + b.upper * jj) / last;
  }
  /// Throws DomainError for invalid nodes.
  State node_to_state(const NodeIndex& node) const;
  /// Nearest index in one dimension; clamps outside the bounds, ties go to the lower index.
  std::size_t nearest_index(std::size_t dim, double value) const;
  NodeIndex state_to_nearest_node(const State& state, std::size_t regime) const;
  bool contains(std::size_t dim, double value) const;

  std::vector<double> retention_levels() const;
  std::vector<double> investment_levels() const;
  ControlSet control_set() const { return {retention_levels(), investment_levels()}; }
  /// Cartesian product ordered lexicographically by (a1, b1, a2, b2).
  std::vector<JointControl> control_grid() const;

 private:
  LatticeSpec spec_;
  std::size_t regimes_;
  std::size_t steps_ = 0;
  std::array<std::size_t, 3> counts_{};
  std::array<std::size_t, 3> strides_{};
};

}  // namespace mcam
