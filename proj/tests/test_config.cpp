#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mcam/config.hpp"
#include "mcam/errors.hpp"

using namespace mcam;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kPaper = std::string(MCAM_SOURCE_DIR) + "/configs/paper_section5.cfg";
const std::string kDemo = std::string(MCAM_SOURCE_DIR) + "/configs/small_demo.cfg";

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

std::string patched(const std::string& from, const std::string& to) {
  std::string text = read_file(kDemo);
  const auto p = text.find(from);
  REQUIRE(p != std::string::npos);
  return text.replace(p, from.size(), to);
}

}  // namespace

TEST_CASE("bundled example configuration carries the reference parameters") {
  const RunConfig c = load_config(kPaper);
  const GameSpec& g = c.game;
  CHECK(g.regimes() == 2);
  CHECK(g.generator.rate(0, 1) == 0.5);
  CHECK(g.generator.rate(1, 1) == -0.5);
  CHECK(g.market.risk_free_rate == std::vector<double>{0.02, 0.03});
  CHECK(g.insurers[0].premium_rate == std::vector<double>{0.05, 0.10});
  CHECK(g.insurers[1].premium_rate == std::vector<double>{0.02, 0.20});
  CHECK(g.insurers[0].claim_rate == std::vector<double>{0.2, 0.8});
  CHECK(g.insurers[1].claim_rate == std::vector<double>{0.3, 0.7});
  CHECK(g.insurers[0].risk_aversion == 17.0);
  CHECK(g.insurers[1].risk_aversion == 21.0);
  CHECK(g.insurers[0].sensitivity == 0.8);
  CHECK(g.insurers[1].sensitivity == 0.7);
  CHECK(g.insurers[0].severity_rate == 0.3);
  CHECK(g.insurers[1].severity_rate == 0.2);
  CHECK(g.insurers[0].loading == 1.1);
  CHECK(g.insurers[1].loading == 1.15);
  CHECK(g.market.risky_drift_scale == 0.2);
  CHECK(g.market.risky_vol_scale == 0.4);
  CHECK(g.market.index_drift_scale == 0.4);
  CHECK(g.market.index_vol_scale == 0.1);
  CHECK(c.lattice.h == 0.2);
  CHECK(c.lattice.time_step == 0.04);
  CHECK(c.lattice.retention_levels == 6);
  CHECK(c.lattice.invest_min == -3.0);
  CHECK(c.lattice.invest_max == 3.0);
  CHECK(c.lattice.invest_step == 0.2);
  REQUIRE(c.simulation);
  CHECK(c.simulation->config.path_count == 100000);
  CHECK(c.simulation->initial_states.size() == 5);
}

TEST_CASE("dump and reload reproduce the configuration") {
  for (const auto& path : {kPaper, kDemo}) {
    const RunConfig a = load_config(path);
    const std::string once = dump_config(a);
    const RunConfig b = parse_config(once);
    CHECK(dump_config(b) == once);
  }
}

TEST_CASE("negative claim rate names the offending field") {
  const auto v = violations_of(patched("\"claim_rate_per_time\": [\n          0.2,", "\"claim_rate_per_time\": [\n          -0.2,"));
  REQUIRE(v.size() == 1);
  CHECK(mentions(v, "game.insurers[0].claim_rate_per_time[0]"));
}

TEST_CASE("every violation is listed, unknown fields included") {
  std::string text = patched("\"h\": 0.2", "\"h\": -0.2, \"colour\": 3");
  const std::string eta = "\"risk_aversion_per_currency\": 17";
  const auto p = text.find(eta);
  REQUIRE(p != std::string::npos);
  text.replace(p, eta.size(), "\"risk_aversion_per_currency\": -17");
  const auto v = violations_of(text);
  CHECK(mentions(v, "lattice.colour: unknown field"));
  CHECK(mentions(v, "lattice.h"));
  CHECK(mentions(v, "game.insurers[0].risk_aversion_per_currency"));
  CHECK(v.size() >= 3);
}

TEST_CASE("type errors and missing sections are reported by path") {
  CHECK(mentions(violations_of("{}"), "config.game: missing required field"));
  CHECK(mentions(violations_of("[]"), "config: must be an object"));
  CHECK(mentions(violations_of(patched("\"h\": 0.2", "\"h\": \"wide\"")), "lattice.h: must be a number"));
}

TEST_CASE("simulation section is optional") {
  std::string text = read_file(kDemo);
  const auto a = text.find("\"simulation\"");
  const auto b = text.find("\"output\"");
  REQUIRE(a != std::string::npos);
  REQUIRE(b != std::string::npos);
  text.erase(a, b - a);
  const RunConfig c = parse_config(text);
  CHECK_FALSE(c.simulation);
}

TEST_CASE("malformed JSON reports line and column") {
  try {
    parse_config("{\n \"game\": {\n  \"horizon\": 1,,\n}}", "x.cfg");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string what = e.what();
    CHECK(what.find("x.cfg: line 3, column 16") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.cfg"), ParseError);
}

TEST_CASE("regimes are 1-based in the file") {
  CHECK(mentions(violations_of(patched("\"regime\": 1", "\"regime\": 3")), "regime"));
  CHECK(mentions(violations_of(patched("\"regime\": 1", "\"regime\": 0")), "regime"));
  const RunConfig c = load_config(kDemo);
  CHECK(c.simulation->initial_states[0].regime == 0);
  CHECK(c.simulation->initial_states[2].regime == 1);
}

TEST_CASE("cross-section checks") {
  CHECK(mentions(violations_of(patched("\"euler_step\": 0.001", "\"euler_step\": 0.003")), "euler_step"));
  CHECK(mentions(violations_of(patched("\"time_step\": 0.002", "\"time_step\": 2")), "time_step"));
}

TEST_CASE("hash is the 64-bit FNV-1a digest") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}
