#pragma once

// Shared problem instances for the test suites.

#include "mcam/lattice.hpp"
#include "mcam/model.hpp"

namespace mcam::testing {

/// Two-regime game with the reference market and insurer parameters.
inline GameSpec paper_game() {
  GameSpec g;
  g.generator.rates = {{-0.5, 0.5}, {0.5, -0.5}};
  g.market.risk_free_rate = {0.02, 0.03};
  g.market.risky_drift_scale = 0.2;
  g.market.risky_vol_scale = 0.4;
  g.market.index_drift_scale = 0.4;
  g.market.index_vol_scale = 0.1;
  g.insurers[0] = {{0.05, 0.10}, {0.20, 0.80}, 0.3, 17.0, 0.8, 1.1, ReinsuranceMode::Proportional, {}};
  g.insurers[1] = {{0.02, 0.20}, {0.30, 0.70}, 0.2, 21.0, 0.7, 1.15, ReinsuranceMode::Proportional, {}};
  g.horizon = 0.08;
  return g;
}

inline LatticeSpec paper_lattice() {
  LatticeSpec l;
  l.h = 0.2;
  l.time_step = 0.04;
  l.horizon = 0.08;
  l.bounds = {Interval{-3.0, 3.0}, Interval{-3.0, 3.0}, Interval{0.41, 2.01}};
  l.retention_levels = 6;
  l.invest_min = -3.0;
  l.invest_max = 3.0;
  l.invest_step = 0.2;
  return l;
}

/// A small CFL-admissible instance: reference market and insurers, narrow controls, short step.
inline LatticeSpec small_lattice() {
  LatticeSpec l;
  l.h = 0.2;
  l.time_step = 0.002;
  l.horizon = 0.008;
  l.bounds = {Interval{-0.8, 0.8}, Interval{-0.8, 0.8}, Interval{0.81, 1.21}};
  l.retention_levels = 3;
  l.invest_min = -0.5;
  l.invest_max = 0.5;
  l.invest_step = 0.25;
  return l;
}

/// No-jump, single-regime, kappa = 0 game with a frozen index (tiny index coefficients).
inline GameSpec plain_game(double eta = 1.0) {
  GameSpec g;
  g.generator.rates = {{0.0}};
  g.market.risk_free_rate = {0.02};
  g.market.risky_drift_scale = 0.2;
  g.market.risky_vol_scale = 0.4;
  g.market.index_drift_scale = 1e-3;
  g.market.index_vol_scale = 1e-3;
  g.insurers[0] = {{1.0}, {0.0}, 0.3, eta, 0.0, 0.5, ReinsuranceMode::Proportional, {}};
  g.insurers[1] = {{1.0}, {0.0}, 0.2, eta, 0.0, 0.5, ReinsuranceMode::Proportional, {}};
  g.horizon = 0.1;
  return g;
}

}  // namespace mcam::testing
