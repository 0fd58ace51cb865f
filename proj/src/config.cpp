#include "mcam/config.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "mcam/errors.hpp"

namespace mcam {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Reads typed fields out of a JSON tree, recording every problem by path.
class Reader {
 public:
  std::vector<std::string> violations;
  std::vector<std::string> unknown;  // reported, but do not block the invariant checks

  void fail(const std::string& path, const std::string& what) { violations.push_back(path + ": " + what); }

  bool object(const json& node, const std::string& path, std::initializer_list<const char*> keys) {
    if (!node.is_object()) {
      fail(path, "must be an object");
      return false;
    }
    for (const auto& [key, value] : node.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        unknown.push_back(path + "." + key + ": unknown field");
      }
    }
    return true;
  }

  const json* field(const json& node, const std::string& path, const char* key, bool required) {
    const auto it = node.find(key);
    if (it == node.end() || it->is_null()) {
      if (required) fail(path + "." + key, "missing required field");
      return nullptr;
    }
    return &*it;
  }

  double number(const json& node, const std::string& path, const char* key,
                std::optional<double> fallback = {}) {
    const json* v = field(node, path, key, !fallback);
    if (!v) return fallback.value_or(0.0);
    if (!v->is_number()) {
      fail(path + "." + key, "must be a number");
      return 0.0;
    }
    return v->get<double>();
  }

  std::uint64_t count(const json& node, const std::string& path, const char* key,
                      std::optional<std::uint64_t> fallback = {}) {
    const json* v = field(node, path, key, !fallback);
    if (!v) return fallback.value_or(0);
    if (!v->is_number_unsigned()) {
      fail(path + "." + key, "must be a nonnegative integer");
      return 0;
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const json& node, const std::string& path, const char* key, bool fallback) {
    const json* v = field(node, path, key, false);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      fail(path + "." + key, "must be true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string text(const json& node, const std::string& path, const char* key,
                   std::optional<std::string> fallback = {}) {
    const json* v = field(node, path, key, !fallback);
    if (!v) return fallback.value_or("");
    if (!v->is_string()) {
      fail(path + "." + key, "must be a string");
      return fallback.value_or("");
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const json& node, const std::string& path, const char* key,
                              bool required = true) {
    const json* v = field(node, path, key, required);
    std::vector<double> out;
    if (!v) return out;
    if (!v->is_array()) {
      fail(path + "." + key, "must be an array of numbers");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        fail(path + "." + key + "[" + std::to_string(i) + "]", "must be a number");
        out.push_back(0.0);
      } else {
        out.push_back((*v)[i].get<double>());
      }
    }
    return out;
  }

  Interval interval(const json& node, const std::string& path, const char* key) {
    const std::vector<double> v = numbers(node, path, key);
    if (v.size() != 2) {
      if (node.contains(key)) fail(path + "." + key, "must be [lower, upper]");
      return {};
    }
    return {v[0], v[1]};
  }

  std::size_t regime(const json& node, const std::string& path) {
    const std::uint64_t r = count(node, path, "regime", 1);
    if (r < 1) fail(path + ".regime", "regimes are numbered from 1");
    return r < 1 ? 0 : static_cast<std::size_t>(r - 1);
  }
};

InsurerSpec read_insurer(Reader& r, const json& node, const std::string& path) {
  InsurerSpec ins;
  if (!r.object(node, path,
                {"premium_rate_per_time", "claim_rate_per_time", "severity_rate_per_currency",
                 "risk_aversion_per_currency", "sensitivity", "loading", "reinsurance_mode",
                 "claim_scale"})) {
    return ins;
  }
  ins.premium_rate = r.numbers(node, path, "premium_rate_per_time");
  ins.claim_rate = r.numbers(node, path, "claim_rate_per_time");
  ins.severity_rate = r.number(node, path, "severity_rate_per_currency");
  ins.risk_aversion = r.number(node, path, "risk_aversion_per_currency");
  ins.sensitivity = r.number(node, path, "sensitivity");
  ins.loading = r.number(node, path, "loading");
  const std::string mode = r.text(node, path, "reinsurance_mode", std::string("proportional"));
  try {
    ins.mode = parse_reinsurance_mode(mode);
  } catch (const DomainError&) {
    r.fail(path + ".reinsurance_mode", "must be \"proportional\" or \"excess_of_loss\"");
  }
  ins.claim_scale = r.numbers(node, path, "claim_scale", false);
  return ins;
}

GameSpec read_game(Reader& r, const json& node) {
  const std::string path = "game";
  GameSpec g;
  if (!r.object(node, path,
                {"horizon", "severity_tail_probability", "generator_per_time", "market", "insurers"})) {
    return g;
  }
  g.horizon = r.number(node, path, "horizon");
  g.severity_tail = r.number(node, path, "severity_tail_probability", 1e-6);

  if (const json* q = r.field(node, path, "generator_per_time", true); q && !q->is_array()) {
    r.fail(path + ".generator_per_time", "must be an array of rows");
  } else if (q) {
    for (std::size_t i = 0; i < q->size(); ++i) {
      const json& row = (*q)[i];
      const std::string rpath = path + ".generator_per_time[" + std::to_string(i) + "]";
      std::vector<double> values;
      if (!row.is_array()) {
        r.fail(rpath, "must be an array of numbers");
      } else {
        for (std::size_t j = 0; j < row.size(); ++j) {
          if (!row[j].is_number()) r.fail(rpath + "[" + std::to_string(j) + "]", "must be a number");
          values.push_back(row[j].is_number() ? row[j].get<double>() : 0.0);
        }
      }
      g.generator.rates.push_back(std::move(values));
    }
  }

  if (const json* m = r.field(node, path, "market", true)) {
    const std::string mpath = path + ".market";
    if (r.object(*m, mpath,
                 {"risk_free_rate_per_time", "risky_drift_scale", "risky_vol_scale",
                  "index_drift_scale", "index_vol_scale"})) {
      g.market.risk_free_rate = r.numbers(*m, mpath, "risk_free_rate_per_time");
      g.market.risky_drift_scale = r.number(*m, mpath, "risky_drift_scale");
      g.market.risky_vol_scale = r.number(*m, mpath, "risky_vol_scale");
      g.market.index_drift_scale = r.number(*m, mpath, "index_drift_scale");
      g.market.index_vol_scale = r.number(*m, mpath, "index_vol_scale");
    }
  }

  if (const json* ins = r.field(node, path, "insurers", true)) {
    if (!ins->is_array() || ins->size() != 2) {
      r.fail(path + ".insurers", "must be an array of exactly two insurers");
    } else {
      for (std::size_t k = 0; k < 2; ++k) {
        g.insurers[k] = read_insurer(r, (*ins)[k], path + ".insurers[" + std::to_string(k) + "]");
      }
    }
  }
  return g;
}

LatticeSpec read_lattice(Reader& r, const json& node, double horizon) {
  const std::string path = "lattice";
  LatticeSpec l;
  l.horizon = horizon;
  if (!r.object(node, path,
                {"h", "time_step", "x1_bounds", "x2_bounds", "z_bounds", "retention_levels",
                 "investment"})) {
    return l;
  }
  l.h = r.number(node, path, "h");
  l.time_step = r.number(node, path, "time_step");
  l.bounds = {r.interval(node, path, "x1_bounds"), r.interval(node, path, "x2_bounds"),
              r.interval(node, path, "z_bounds")};
  l.retention_levels = r.count(node, path, "retention_levels");
  if (const json* inv = r.field(node, path, "investment", true)) {
    const std::string ipath = path + ".investment";
    if (r.object(*inv, ipath, {"min", "max", "step"})) {
      l.invest_min = r.number(*inv, ipath, "min");
      l.invest_max = r.number(*inv, ipath, "max");
      l.invest_step = r.number(*inv, ipath, "step");
    }
  }
  return l;
}

std::optional<PlayerControl> read_fixed(Reader& r, const json& node, const std::string& path) {
  if (node.is_null()) return std::nullopt;
  if (!r.object(node, path, {"a", "b"})) return std::nullopt;
  return PlayerControl{r.number(node, path, "a"), r.number(node, path, "b")};
}

SolverOptions read_solver(Reader& r, const json& node) {
  const std::string path = "solver";
  SolverOptions o;
  if (!r.object(node, path,
                {"tolerance", "max_rounds", "search", "workers", "fixed_controls", "fixed_retention",
                 "verify_fraction"})) {
    return o;
  }
  o.tolerance = r.number(node, path, "tolerance", 1e-12);
  o.max_rounds = r.count(node, path, "max_rounds", 50);
  o.workers = r.count(node, path, "workers", 1);
  o.verify_fraction = r.number(node, path, "verify_fraction", 0.01);
  const std::string search = r.text(node, path, "search", std::string("best_response"));
  if (search == "best_response") {
    o.search = SearchMode::BestResponse;
  } else if (search == "exhaustive") {
    o.search = SearchMode::Exhaustive;
  } else {
    r.fail(path + ".search", "must be \"best_response\" or \"exhaustive\"");
  }
  if (const json* fixed = r.field(node, path, "fixed_controls", false)) {
    if (!fixed->is_array() || fixed->size() != 2) {
      r.fail(path + ".fixed_controls", "must be [player1 or null, player2 or null]");
    } else {
      for (std::size_t k = 0; k < 2; ++k) {
        o.fixed_controls[k] =
            read_fixed(r, (*fixed)[k], path + ".fixed_controls[" + std::to_string(k) + "]");
      }
    }
  }
  if (const json* fixed = r.field(node, path, "fixed_retention", false)) {
    if (!fixed->is_array() || fixed->size() != 2) {
      r.fail(path + ".fixed_retention", "must be [player1 or null, player2 or null]");
    } else {
      for (std::size_t k = 0; k < 2; ++k) {
        const json& a = (*fixed)[k];
        if (a.is_null()) continue;
        if (!a.is_number()) {
          r.fail(path + ".fixed_retention[" + std::to_string(k) + "]", "must be a number or null");
        } else {
          o.fixed_retention[k] = a.get<double>();
        }
      }
    }
  }
  return o;
}

SimulationSection read_simulation(Reader& r, const json& node) {
  const std::string path = "simulation";
  SimulationSection s;
  if (!r.object(node, path,
                {"path_count", "euler_step", "seed", "policy", "clamp_to_lattice", "initial_states"})) {
    return s;
  }
  s.config.path_count = r.count(node, path, "path_count");
  s.config.euler_step = r.number(node, path, "euler_step");
  s.config.seed = r.count(node, path, "seed", 1);
  s.clamp_to_lattice = r.boolean(node, path, "clamp_to_lattice", true);
  if (const json* p = r.field(node, path, "policy", false)) {
    if (p->is_string()) {
      if (p->get<std::string>() != "solved") r.fail(path + ".policy", "must be \"solved\" or a constant control");
    } else if (r.object(*p, path + ".policy", {"a1", "b1", "a2", "b2"})) {
      const std::string ppath = path + ".policy";
      s.constant_control = JointControl{r.number(*p, ppath, "a1"), r.number(*p, ppath, "b1"),
                                        r.number(*p, ppath, "a2"), r.number(*p, ppath, "b2")};
    }
  }
  if (const json* init = r.field(node, path, "initial_states", true)) {
    if (!init->is_array() || init->empty()) {
      r.fail(path + ".initial_states", "must be a nonempty array");
    } else {
      for (std::size_t n = 0; n < init->size(); ++n) {
        const std::string ipath = path + ".initial_states[" + std::to_string(n) + "]";
        const json& item = (*init)[n];
        InitialState st;
        if (r.object(item, ipath, {"x1", "x2", "z", "regime"})) {
          st.state = {r.number(item, ipath, "x1"), r.number(item, ipath, "x2"),
                      r.number(item, ipath, "z")};
          st.regime = r.regime(item, ipath);
        }
        s.initial_states.push_back(st);
      }
    }
  }
  return s;
}

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  // byte is 1-based and points at the offending character
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

std::vector<std::string> collect_violations(const RunConfig& c) {
  std::vector<std::string> out;
  c.game.collect_violations("game", out);
  c.lattice.collect_violations("lattice", out);
  const std::size_t m = c.game.regimes();
  if (m > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (c.lattice.time_step > 0.0 && i < c.game.insurers[0].claim_rate.size() &&
          i < c.game.insurers[1].claim_rate.size() &&
          !(c.game.total_claim_rate(i) * c.lattice.time_step < 1.0)) {
        out.push_back("lattice.time_step: total claim rate times time step must be < 1 in regime " +
                      std::to_string(i + 1));
      }
    }
  }
  if (!(c.solver.tolerance >= 0.0)) out.push_back("solver.tolerance: must be >= 0");
  if (c.solver.max_rounds < 1) out.push_back("solver.max_rounds: must be >= 1");
  if (c.solver.workers < 1) out.push_back("solver.workers: must be >= 1");
  if (!(c.solver.verify_fraction >= 0.0 && c.solver.verify_fraction <= 1.0)) {
    out.push_back("solver.verify_fraction: must lie in [0, 1]");
  }
  for (std::size_t k = 0; k < 2; ++k) {
    if (const auto& f = c.solver.fixed_controls[k]; f && !(f->a >= 0.0 && f->a <= 1.0)) {
      out.push_back("solver.fixed_controls[" + std::to_string(k) + "].a: must lie in [0, 1]");
    }
    if (const auto& a = c.solver.fixed_retention[k]; a && !(*a >= 0.0 && *a <= 1.0)) {
      out.push_back("solver.fixed_retention[" + std::to_string(k) + "]: must lie in [0, 1]");
    }
  }
  if (c.simulation) {
    const SimulationSection& s = *c.simulation;
    s.config.collect_violations("simulation", c.game.horizon, out);
    if (s.config.euler_step > c.lattice.time_step * (1.0 + 1e-12)) {
      out.push_back("simulation.euler_step: must not exceed lattice.time_step");
    }
    for (std::size_t n = 0; n < s.initial_states.size(); ++n) {
      if (s.initial_states[n].regime >= m) {
        out.push_back("simulation.initial_states[" + std::to_string(n) + "].regime: outside 1.." +
                      std::to_string(m));
      }
    }
  }
  if (c.output_directory.empty()) out.push_back("output.directory: must not be empty");
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    const auto detail = what.find("syntax error");
    if (detail != std::string::npos) what = what.substr(detail);
    throw ParseError(source + ": " + location(text, e.byte) + ": " + what);
  }

  Reader r;
  RunConfig c;
  if (r.object(root, "config", {"game", "lattice", "solver", "simulation", "output"})) {
    if (const json* g = r.field(root, "config", "game", true)) c.game = read_game(r, *g);
    if (const json* l = r.field(root, "config", "lattice", true)) c.lattice = read_lattice(r, *l, c.game.horizon);
    if (const json* s = r.field(root, "config", "solver", false)) c.solver = read_solver(r, *s);
    if (const json* s = r.field(root, "config", "simulation", false)) c.simulation = read_simulation(r, *s);
    if (const json* o = r.field(root, "config", "output", false)) {
      if (r.object(*o, "output", {"directory", "full_history"})) {
        c.output_directory = r.text(*o, "output", "directory", std::string("out"));
        c.solver.full_history = r.boolean(*o, "output", "full_history", false);
      }
    }
  }
  // Nested invariants are only meaningful once the shape is right.
  if (r.violations.empty()) r.violations = collect_violations(c);
  r.unknown.insert(r.unknown.end(), r.violations.begin(), r.violations.end());
  if (!r.unknown.empty()) throw ValidationError(std::move(r.unknown));
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

namespace {

ordered_json insurer_json(const InsurerSpec& ins) {
  ordered_json j;
  j["premium_rate_per_time"] = ins.premium_rate;
  j["claim_rate_per_time"] = ins.claim_rate;
  j["severity_rate_per_currency"] = ins.severity_rate;
  j["risk_aversion_per_currency"] = ins.risk_aversion;
  j["sensitivity"] = ins.sensitivity;
  j["loading"] = ins.loading;
  j["reinsurance_mode"] = to_string(ins.mode);
  if (!ins.claim_scale.empty()) j["claim_scale"] = ins.claim_scale;
  return j;
}

}  // namespace

ordered_json to_json(const RunConfig& c) {
  ordered_json root;
  ordered_json& g = root["game"];
  g["horizon"] = c.game.horizon;
  g["severity_tail_probability"] = c.game.severity_tail;
  g["generator_per_time"] = c.game.generator.rates;
  g["market"] = {{"risk_free_rate_per_time", c.game.market.risk_free_rate},
                 {"risky_drift_scale", c.game.market.risky_drift_scale},
                 {"risky_vol_scale", c.game.market.risky_vol_scale},
                 {"index_drift_scale", c.game.market.index_drift_scale},
                 {"index_vol_scale", c.game.market.index_vol_scale}};
  g["insurers"] = ordered_json::array({insurer_json(c.game.insurers[0]), insurer_json(c.game.insurers[1])});

  ordered_json& l = root["lattice"];
  l["h"] = c.lattice.h;
  l["time_step"] = c.lattice.time_step;
  const char* names[3] = {"x1_bounds", "x2_bounds", "z_bounds"};
  for (std::size_t d = 0; d < 3; ++d) l[names[d]] = {c.lattice.bounds[d].lower, c.lattice.bounds[d].upper};
  l["retention_levels"] = c.lattice.retention_levels;
  l["investment"] = {{"min", c.lattice.invest_min}, {"max", c.lattice.invest_max},
                     {"step", c.lattice.invest_step}};

  ordered_json& s = root["solver"];
  s["tolerance"] = c.solver.tolerance;
  s["max_rounds"] = c.solver.max_rounds;
  s["search"] = c.solver.search == SearchMode::Exhaustive ? "exhaustive" : "best_response";
  s["workers"] = c.solver.workers;
  s["verify_fraction"] = c.solver.verify_fraction;
  ordered_json fixed = ordered_json::array();
  for (const auto& f : c.solver.fixed_controls) {
    fixed.push_back(f ? ordered_json{{"a", f->a}, {"b", f->b}} : ordered_json(nullptr));
  }
  s["fixed_controls"] = fixed;
  ordered_json retention = ordered_json::array();
  for (const auto& a : c.solver.fixed_retention) retention.push_back(a ? ordered_json(*a) : ordered_json(nullptr));
  s["fixed_retention"] = retention;

  if (c.simulation) {
    const SimulationSection& sim = *c.simulation;
    ordered_json& m = root["simulation"];
    m["path_count"] = sim.config.path_count;
    m["euler_step"] = sim.config.euler_step;
    m["seed"] = sim.config.seed;
    if (sim.constant_control) {
      const JointControl& u = *sim.constant_control;
      m["policy"] = {{"a1", u.a1}, {"b1", u.b1}, {"a2", u.a2}, {"b2", u.b2}};
    } else {
      m["policy"] = "solved";
    }
    m["clamp_to_lattice"] = sim.clamp_to_lattice;
    ordered_json states = ordered_json::array();
    for (const auto& st : sim.initial_states) {
      states.push_back({{"x1", st.state.x1}, {"x2", st.state.x2}, {"z", st.state.z},
                        {"regime", st.regime + 1}});
    }
    m["initial_states"] = states;
  }
  root["output"] = {{"directory", c.output_directory}, {"full_history", c.solver.full_history}};
  return root;
}

std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

}  // namespace mcam
