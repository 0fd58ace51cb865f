#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mcam/errors.hpp"
#include "mcam/kernel.hpp"

using namespace mcam;
using mcam::testing::paper_game;
using mcam::testing::paper_lattice;
using mcam::testing::small_lattice;

namespace {

/// One regime, drift of x1 equal to 0.1, volatility of x1 equal to 0.2 at z = 0.5, static index.
GameSpec hand_game() {
  GameSpec g;
  g.generator.rates = {{0.0}};
  g.market.risk_free_rate = {0.0};
  g.market.risky_drift_scale = 0.0;
  g.market.risky_vol_scale = 0.4;
  g.market.index_drift_scale = 0.0;
  g.market.index_vol_scale = 0.0;
  g.insurers[0] = {{0.1}, {0.5}, 0.3, 1.0, 0.0, 0.5, ReinsuranceMode::Proportional, {}};
  g.insurers[1] = {{0.0}, {0.5}, 0.3, 1.0, 0.0, 0.5, ReinsuranceMode::Proportional, {}};
  g.horizon = 0.08;
  return g;
}

LatticeSpec hand_lattice() {
  LatticeSpec l = paper_lattice();
  l.bounds[2] = {0.1, 0.9};  // z = 0.5 at index 2
  return l;
}

double probability_of(const Stencil& s, const NodeIndex& target) {
  for (const auto& e : s.entries) {
    if (e.target == target) return e.probability;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("zero dynamics keep all mass on the node") {
  GameSpec g = hand_game();
  g.insurers[0].premium_rate = {0.0};
  const Lattice lat(hand_lattice(), 1);
  const Stencil s = diffusion_stencil(g, lat, {{15, 15, 2}, 0}, 0.0, {1, 0, 1, 0}, 0);
  CHECK(s.entries.empty());
  CHECK(s.self_probability == 1.0);
}

TEST_CASE("hand-evaluated stencil") {
  const GameSpec g = hand_game();
  const Lattice lat(hand_lattice(), 1);
  const NodeIndex node{{15, 15, 2}, 0};
  REQUIRE(lat.node_to_state(node).z == doctest::Approx(0.5));
  const JointControl u{1.0, 1.0, 1.0, 0.0};
  const Stencil s = diffusion_stencil(g, lat, node, 0.0, u, 0);
  CHECK(probability_of(s, {{16, 15, 2}, 0}) == doctest::Approx(0.04).epsilon(1e-13));
  CHECK(probability_of(s, {{14, 15, 2}, 0}) == doctest::Approx(0.02).epsilon(1e-13));
  CHECK(s.self_probability == doctest::Approx(0.94).epsilon(1e-13));
  CHECK(std::abs(s.total() - 1.0) <= 1e-12);

  const ConsistencyReport r =
      check_local_consistency(g, lat, {{node, 0, u, 0}}, 1.0);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].mean_error_own <= 1e-15);
  // 0.2^2 (0.04 + 0.02) - 0.004^2 against 0.2^2 * 0.04
  CHECK(r.rows[0].variance_error == doctest::Approx(0.0024 - 1.6e-5 - 0.0016).epsilon(1e-10));
}

TEST_CASE("regime switching probability") {
  const GameSpec g = paper_game();
  LatticeSpec ls = paper_lattice();
  ls.invest_min = ls.invest_max = 0.0;
  ls.time_step = 0.04;
  const Lattice lat(ls, 2);
  // Tiny drift here: premiums balanced and full retention, so the CFL holds at the centre.
  GameSpec calm = g;
  calm.market.risk_free_rate = {0.0, 0.0};
  for (auto& ins : calm.insurers) ins.premium_rate = {0.0, 0.0};
  const Stencil s = diffusion_stencil(calm, lat, {{15, 15, 3}, 0}, 0.0, {1, 0, 1, 0}, 1);
  CHECK(probability_of(s, {{15, 15, 3}, 1}) == doctest::Approx(0.02).epsilon(1e-14));
}

TEST_CASE("negative self probability raises a CFL violation") {
  const GameSpec g = paper_game();
  const Lattice lat(paper_lattice(), 2);
  try {
    diffusion_stencil(g, lat, {{0, 15, 8}, 1}, 0.0, {0.0, 3.0, 0.0, -3.0}, 0);
    FAIL("expected a CFL violation");
  } catch (const CflViolation& e) {
    CHECK(e.self_probability < 0.0);
    CHECK(e.max_time_step < 0.04);
    CHECK(e.max_time_step > 0.0);
    CHECK(e.node == NodeIndex{{0, 15, 8}, 1});
    CHECK(e.control.b1 == 3.0);
  }
}

TEST_CASE("CFL scan over the example configuration") {
  const GameSpec g = paper_game();
  const Lattice lat(paper_lattice(), 2);
  const ControlSet set = lat.control_set();
  const CflReport r = cfl_scan(g, lat, set, set);
  CHECK_FALSE(r.ok());
  CHECK(r.max_time_step < 0.04);
  CHECK_THROWS_AS(require_cfl(r), CflViolation);

  // Re-running at the reported step must pass.
  LatticeSpec ls = paper_lattice();
  ls.time_step = r.max_time_step;
  ls.horizon = r.max_time_step;
  const Lattice ok_lat(ls, 2);
  const CflReport again = cfl_scan(g, ok_lat, set, set);
  CHECK(again.ok());
  CHECK(again.worst_self_probability >= -1e-12);
}

TEST_CASE("CFL scan matches a brute-force scan") {
  const GameSpec g = paper_game();
  const Lattice lat(small_lattice(), 2);
  const ControlSet set = lat.control_set();
  const CflReport r = cfl_scan(g, lat, set, set);
  REQUIRE(r.ok());
  double worst = 1.0;
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const NodeIndex node = lat.node(f);
    const State s = lat.node_to_state(node);
    for (std::size_t n = 0; n < lat.steps(); ++n) {
      for (const auto& u : lat.control_grid()) {
        for (std::size_t k = 0; k < 2; ++k) {
          const LocalWeights w =
              local_weights(g, s, lat.time_of(n), node.regime, u, k, lat.h(), lat.time_step());
          worst = std::min(worst, w.self);
        }
      }
    }
  }
  CHECK(r.worst_self_probability == doctest::Approx(worst).epsilon(1e-13));
}

TEST_CASE("stencils are stochastic whenever the CFL holds") {
  const GameSpec g = paper_game();
  const Lattice lat(small_lattice(), 2);
  const auto grid = lat.control_grid();
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const NodeIndex node = lat.node(f);
    for (std::size_t c = 0; c < grid.size(); c += 7) {
      for (std::size_t k = 0; k < 2; ++k) {
        const Stencil s = diffusion_stencil(g, lat, node, 0.004, grid[c], k);
        bool nonneg = s.self_probability >= 0.0;
        for (const auto& e : s.entries) nonneg = nonneg && e.probability >= 0.0 && lat.valid(e.target);
        CHECK(nonneg);
        CHECK(std::abs(s.total() - 1.0) <= 1e-12);
        const auto jumps = jump_targets(g, lat, node, grid[c], k);
        double total = 0.0;
        for (const auto& e : jumps) total += e.probability;
        CHECK(std::abs(total - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("halving the time step raises every self probability") {
  const GameSpec g = paper_game();
  LatticeSpec fine = small_lattice();
  fine.time_step /= 2.0;
  const Lattice coarse_lat(small_lattice(), 2), fine_lat(fine, 2);
  const auto grid = coarse_lat.control_grid();
  for (std::size_t f = 0; f < coarse_lat.size(); f += 3) {
    const NodeIndex node = coarse_lat.node(f);
    for (std::size_t c = 0; c < grid.size(); c += 5) {
      for (std::size_t k = 0; k < 2; ++k) {
        const double a = diffusion_stencil(g, coarse_lat, node, 0.0, grid[c], k).self_probability;
        const double b = diffusion_stencil(g, fine_lat, node, 0.0, grid[c], k).self_probability;
        CHECK(b > a);
      }
    }
  }
}

TEST_CASE("jump mixture") {
  const GameSpec g = paper_game();
  const JumpMixture m1 = jump_mixture(g, 0);
  CHECK(m1.total_rate == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m1.from_player1 == doctest::Approx(0.4).epsilon(1e-15));
  const JumpMixture m2 = jump_mixture(g, 1);
  CHECK(m2.total_rate == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(m2.from_player1 == doctest::Approx(8.0 / 15.0).epsilon(1e-15));

  GameSpec sym = g;
  sym.insurers[1].claim_rate = sym.insurers[0].claim_rate;
  CHECK(jump_mixture(sym, 1).from_player1 == 0.5);

  GameSpec none = g;
  none.insurers[0].claim_rate = none.insurers[1].claim_rate = {0.0, 0.0};
  CHECK_THROWS_AS(jump_mixture(none, 0), DomainError);
  CHECK_THROWS_AS(jump_mixture(g, 2), DomainError);
}

TEST_CASE("jump targets") {
  const Lattice lat(paper_lattice(), 2);
  const NodeIndex node{{15, 15, 3}, 0};

  SUBCASE("full cession without sensitivity keeps own-claim mass at the node") {
    GameSpec g = paper_game();
    g.insurers[0].sensitivity = 0.0;
    const auto targets = jump_targets(g, lat, node, {0.0, 0.0, 0.5, 0.0}, 0);
    REQUIRE(targets.size() == 1);
    CHECK(targets[0].target == node);
    CHECK(targets[0].probability == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a single atom at 0.6 moves x_k down three steps") {
    GameSpec g = paper_game();
    g.insurers[0].severity_rate = 1e300;
    g.insurers[0].claim_scale = {3.0, 3.0};
    g.insurers[0].sensitivity = 0.0;
    g.insurers[1].claim_rate = {0.0, 0.0};
    const auto targets = jump_targets(g, lat, node, {1.0, 0.0, 1.0, 0.0}, 0);
    REQUIRE(targets.size() == 1);
    CHECK(targets[0].target == NodeIndex{{12, 15, 3}, 0});
    CHECK(targets[0].probability == 1.0);
  }
  SUBCASE("opponent claims move x_k up by kappa times the retained claim") {
    GameSpec g = paper_game();
    g.insurers[1].severity_rate = 1e300;
    g.insurers[1].claim_scale = {5.0, 5.0};  // claim 1.0, kappa_1 = 0.8 -> +0.8 = 4 steps
    g.insurers[0].claim_rate = {0.0, 0.0};
    const auto targets = jump_targets(g, lat, node, {1.0, 0.0, 1.0, 0.0}, 0);
    REQUIRE(targets.size() == 1);
    CHECK(targets[0].target == NodeIndex{{19, 15, 3}, 0});
  }
  SUBCASE("targets beyond the lower bound are clamped and merged") {
    GameSpec g = paper_game();
    const auto targets = jump_targets(g, lat, {{0, 15, 3}, 0}, {1.0, 0.0, 1.0, 0.0}, 0);
    double at_bottom = 0.0, total = 0.0;
    for (const auto& e : targets) {
      CHECK(lat.valid(e.target));
      if (e.target.j[0] == 0) at_bottom += e.probability;
      total += e.probability;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(at_bottom == doctest::Approx(jump_mixture(g, 0).from_player1).epsilon(1e-12));
  }
}

TEST_CASE("precomputed jump kernel agrees with explicit targets") {
  const GameSpec g = paper_game();
  const Lattice lat(small_lattice(), 2);
  const ControlSet set = lat.control_set();
  const JumpKernel kernel(g, lat, set, set);
  for (std::size_t regime = 0; regime < 2; ++regime) {
    const JumpMixture mix = jump_mixture(g, regime);
    for (std::size_t ia = 0; ia < set.retentions().size(); ++ia) {
      for (std::size_t ib = 0; ib < set.retentions().size(); ++ib) {
        const JointControl u{set.retentions()[ia], 0.0, set.retentions()[ib], 0.0};
        for (std::size_t k = 0; k < 2; ++k) {
          for (std::size_t j = 0; j < lat.count(k); ++j) {
            NodeIndex node{{4, 4, 1}, regime};
            node.j[k] = j;
            std::vector<double> expected(lat.count(k), 0.0), got(lat.count(k), 0.0);
            for (const auto& e : jump_targets(g, lat, node, u, k)) expected[e.target.j[k]] += e.probability;
            const std::size_t own_a = k == 0 ? ia : ib, opp_a = k == 0 ? ib : ia;
            for (const auto& e : kernel.own(k, regime, own_a, j)) got[e.target] += mix.from(k) * e.weight;
            for (const auto& e : kernel.opponent(k, regime, opp_a, j)) {
              got[e.target] += mix.from(other_player(k)) * e.weight;
            }
            for (std::size_t t = 0; t < expected.size(); ++t) CHECK(got[t] == doctest::Approx(expected[t]).epsilon(1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("local consistency on random interior samples") {
  const GameSpec g = paper_game();
  const Lattice lat(small_lattice(), 2);
  const ControlSet set = lat.control_set();
  const CflReport cfl = cfl_scan(g, lat, set, set);
  REQUIRE(cfl.ok());
  const auto samples = random_consistency_samples(lat, set, set, 500, 42);
  CHECK(samples.size() == 500);
  const double C = consistency_coefficient(cfl);
  const ConsistencyReport r = check_local_consistency(g, lat, samples, C);
  CHECK(r.rows.size() + r.skipped_boundary == 500);
  CHECK(r.skipped_boundary == 0);  // samples are interior by construction
  for (std::size_t d = 0; d < 3; ++d) CHECK(r.mean_error[d] <= 1e-12);
  CHECK(r.variance_error <= r.variance_tolerance);
  CHECK(r.cfl_margin >= 0.0);
  CHECK(std::isfinite(r.variance_error));

  const auto again = random_consistency_samples(lat, set, set, 500, 42);
  CHECK(again[17].node == samples[17].node);
  CHECK(again[499].control.b2 == samples[499].control.b2);
}

TEST_CASE("claim split sums to one exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rate(0.0, 3.0), step(1e-5, 0.1);
  GameSpec g = paper_game();
  for (int n = 0; n < 20000; ++n) {
    g.insurers[0].claim_rate[0] = rate(rng);
    g.insurers[1].claim_rate[0] = rate(rng);
    const double delta = step(rng);
    const ClaimWeights w = claim_weights(g, 0, delta);
    CHECK(w.claim[0] == g.insurers[0].claim_rate[0] * delta);
    REQUIRE(w.no_claim + (w.claim[0] + w.claim[1]) == 1.0);
  }
}
