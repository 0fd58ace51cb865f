#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mcam/errors.hpp"
#include "mcam/model.hpp"

using namespace mcam;
using mcam::testing::paper_game;

TEST_CASE("generator invariants are enforced") {
  GameSpec g = paper_game();
  CHECK_NOTHROW(g.validate());

  g.generator.rates = {{-0.5, 0.4}, {0.5, -0.5}};
  CHECK_THROWS_AS(g.validate(), ValidationError);

  g.generator.rates = {{0.5, -0.5}, {0.5, -0.5}};
  try {
    g.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 1);
    CHECK(e.violations()[0].find("[0][1]") != std::string::npos);
  }
}

TEST_CASE("validation reports every violation") {
  GameSpec g = paper_game();
  g.insurers[0].claim_rate[1] = -0.1;
  g.insurers[1].sensitivity = 1.5;
  g.horizon = 0.0;
  try {
    g.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 3);
  }
}

TEST_CASE("drift examples") {
  SUBCASE("zero rates, premiums and investment leave only the index drift") {
    GameSpec g = paper_game();
    g.market.risk_free_rate = {0.0, 0.0};
    for (auto& ins : g.insurers) ins.premium_rate = {0.0, 0.0};
    const JointControl u{1.0, 0.0, 1.0, 0.0};
    const Vec3 mu = drift(g, {0.7, -1.3, 1.5}, 0.02, 0, u);
    CHECK(mu[0] == 0.0);
    CHECK(mu[1] == 0.0);
    CHECK(mu[2] == doctest::Approx(0.4 * 1.02 * 1.5).epsilon(1e-15));
  }
  SUBCASE("hand evaluation in regime 1") {
    const Vec3 mu = drift(paper_game(), {0.0, 0.0, 1.0}, 0.0, 0, {1.0, 1.0, 1.0, 0.0});
    CHECK(mu[0] == doctest::Approx(0.214).epsilon(1e-14));
  }
  SUBCASE("symmetric insurers without sensitivity drift equally") {
    GameSpec g = paper_game();
    g.insurers[1] = g.insurers[0];
    g.insurers[0].sensitivity = g.insurers[1].sensitivity = 0.0;
    const Vec3 mu = drift(g, {0.4, 0.4, 1.2}, 0.0, 1, {0.6, 0.8, 0.6, 0.8});
    CHECK(mu[0] == mu[1]);
  }
  CHECK_THROWS_AS(drift(paper_game(), {}, 0.0, 2, {}), DomainError);
}

TEST_CASE("diffusion examples") {
  const GameSpec g = paper_game();
  const Vec3 zero = diffusion(g, {0, 0, 1.0}, 0.0, 0, {1, 0, 1, 0});
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
  CHECK(zero[2] == doctest::Approx(0.1));

  const Vec3 s = diffusion(g, {0, 0, 1.0}, 0.0, 0, {1, 1.0, 1, 0.0});
  CHECK(s[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(-0.28).epsilon(1e-15));

  GameSpec sym = g;
  sym.insurers[0].sensitivity = sym.insurers[1].sensitivity = 0.0;
  const Vec3 e = diffusion(sym, {0, 0, 1.3}, 0.0, 1, {0.2, 0.6, 0.4, 0.6});
  CHECK(e[0] == e[1]);
}

TEST_CASE("drift and diffusion are affine in the investments") {
  const GameSpec g = paper_game();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> b(-3.0, 3.0), a(0.0, 1.0), x(-3.0, 3.0), z(0.4, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const State s{x(rng), x(rng), z(rng)};
    const double a1 = a(rng), a2 = a(rng);
    const JointControl u{a1, b(rng), a2, b(rng)};
    const JointControl v{a1, b(rng), a2, b(rng)};
    const JointControl mid{a1, 0.5 * (u.b1 + v.b1), a2, 0.5 * (u.b2 + v.b2)};
    for (std::size_t i = 0; i < 2; ++i) {
      const Vec3 mu_u = drift(g, s, 0.03, i, u), mu_v = drift(g, s, 0.03, i, v);
      const Vec3 mu_m = drift(g, s, 0.03, i, mid);
      const Vec3 sg_u = diffusion(g, s, 0.03, i, u), sg_v = diffusion(g, s, 0.03, i, v);
      const Vec3 sg_m = diffusion(g, s, 0.03, i, mid);
      for (std::size_t d = 0; d < 3; ++d) {
        CHECK(std::abs(0.5 * (mu_u[d] + mu_v[d]) - mu_m[d]) <= 1e-12);
        CHECK(std::abs(0.5 * (sg_u[d] + sg_v[d]) - sg_m[d]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("swapping insurers swaps drift and diffusion components") {
  const GameSpec g = paper_game();
  const GameSpec swapped = swap_insurers(g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> b(-3.0, 3.0), a(0.0, 1.0), x(-3.0, 3.0), z(0.4, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const State s{x(rng), x(rng), z(rng)};
    const State t{s.x2, s.x1, s.z};
    const JointControl u{a(rng), b(rng), a(rng), b(rng)};
    const Vec3 mu = drift(g, s, 0.01, 1, u);
    const Vec3 mu_s = drift(swapped, t, 0.01, 1, swap_players(u));
    const Vec3 sg = diffusion(g, s, 0.01, 1, u);
    const Vec3 sg_s = diffusion(swapped, t, 0.01, 1, swap_players(u));
    CHECK(mu[0] == doctest::Approx(mu_s[1]).epsilon(1e-14));
    CHECK(mu[1] == doctest::Approx(mu_s[0]).epsilon(1e-14));
    CHECK(mu[2] == mu_s[2]);
    CHECK(sg[0] == sg_s[1]);
    CHECK(sg[1] == sg_s[0]);
  }
}

TEST_CASE("retained claim") {
  CHECK(claim_retained(ReinsuranceMode::Proportional, 5.0, 0.4, 0.0) == doctest::Approx(2.0));
  CHECK(claim_retained(ReinsuranceMode::ExcessOfLoss, 5.0, 0.5, 6.0) == 3.0);
  CHECK(claim_retained(ReinsuranceMode::Proportional, 5.0, 1.0, 0.0) == 5.0);
  CHECK(claim_retained(ReinsuranceMode::ExcessOfLoss, 5.0, 1.0, 46.0) == 5.0);
  CHECK_THROWS_AS(claim_retained(ReinsuranceMode::Proportional, -1.0, 0.5, 0.0), DomainError);
}

TEST_CASE("reinsurance premium") {
  InsurerSpec ins = paper_game().insurers[0];
  CHECK(reinsurance_premium(ins, 1.0, 0, 1e-6) == 0.0);
  CHECK(reinsurance_premium(ins, 0.0, 0, 1e-6) == doctest::Approx(7.0).epsilon(1e-14));

  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    const double g = reinsurance_premium(ins, i / 100.0, 1, 1e-6);
    CHECK(g <= previous);
    previous = g;
  }

  ins.mode = ReinsuranceMode::ExcessOfLoss;
  CHECK(reinsurance_premium(ins, 0.0, 0, 1e-6) == doctest::Approx(7.0).epsilon(1e-14));
  // At a = 1 the ceded layer starts at the (1 - tail) quantile: premium (1+l) tail / theta.
  CHECK(reinsurance_premium(ins, 1.0, 0, 1e-6) == doctest::Approx(2.1e-6 / 0.3).epsilon(1e-12));
  CHECK(reinsurance_premium(ins, 1.0, 0, 1e-300) < 1e-290);
}

TEST_CASE("utility") {
  InsurerSpec ins;
  ins.risk_aversion = 17.0;
  CHECK(utility(ins, 0.0) == doctest::Approx(-1.0 / 17.0).epsilon(1e-15));
  CHECK(utility(ins, 1e6) <= 0.0);
  CHECK(std::isfinite(utility(ins, -1e6)));
  ins.risk_aversion = 21.0;
  CHECK(utility(ins, 0.1) == doctest::Approx(-0.005831258488237233).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(-2.0, 2.0);
  for (int i = 0; i < 10000; ++i) {
    double p = x(rng), q = x(rng);
    if (p == q) continue;
    if (p > q) std::swap(p, q);
    CHECK(utility(ins, p) < utility(ins, q));
  }
}

TEST_CASE("severity atoms") {
  InsurerSpec ins = paper_game().insurers[0];
  const auto atoms = severity_atoms(ins, 0.2, 1e-6);
  CHECK(atoms.size() == 231);
  double total = 0.0, mean = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    CHECK(atoms[j].probability >= 0.0);
    CHECK(atoms[j].magnitude == doctest::Approx(0.2 * static_cast<double>(j + 1)));
    total += atoms[j].probability;
    mean += atoms[j].magnitude * atoms[j].probability;
  }
  CHECK(std::abs(total - 1.0) <= 1e-12);
  CHECK(std::abs(mean - 1.0 / 0.3) <= 0.2);

  ins.severity_rate = 1e300;
  const auto point = severity_atoms(ins, 0.2, 1e-6);
  REQUIRE(point.size() == 1);
  CHECK(point[0].magnitude == doctest::Approx(0.2));
  CHECK(point[0].probability == 1.0);

  CHECK_THROWS_AS(severity_atoms(ins, 0.2, 0.0), DomainError);
  CHECK_THROWS_AS(severity_atoms(ins, 0.2, 1.0), DomainError);
  CHECK_THROWS_AS(severity_atoms(ins, 0.0, 0.5), DomainError);
}
