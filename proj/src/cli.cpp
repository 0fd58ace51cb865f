#include "mcam/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "mcam/errors.hpp"
#include "mcam/output.hpp"

namespace mcam {

namespace fs = std::filesystem;

void apply_overrides(RunConfig& config, const RunOverrides& o) {
  if (o.workers) config.solver.workers = *o.workers;
  if (o.out) config.output_directory = *o.out;
  if (o.full_history) config.solver.full_history = true;
  if (o.seed && config.simulation) config.simulation->config.seed = *o.seed;
  const auto violations = collect_violations(config);
  if (!violations.empty()) throw ValidationError(violations);
}

namespace {

using Clock = std::chrono::steady_clock;

class OutputDir {
 public:
  explicit OutputDir(const std::string& path) : root_(path) { fs::create_directories(root_); }

  std::ofstream open(const std::string& name) {
    std::ofstream out(root_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (root_ / name).string());
    files_.push_back(name);
    return out;
  }
  void write(const std::string& name, const std::string& text) { open(name) << text; }
  const std::vector<std::string>& files() const { return files_; }
  std::string path(const std::string& name) const { return (root_ / name).string(); }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

std::string slice_name(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%04zu.csv", n);
  return buf;
}

struct Solved {
  GameSolver solver;
  Solution solution;
  CflReport cfl;
};

Solved solve(const RunConfig& config) {
  GameSolver solver(config.game, Lattice(config.lattice, config.game.regimes()), config.solver);
  const CflReport cfl = solver.cfl();
  require_cfl(cfl);
  Solution solution = solver.solve();
  return {std::move(solver), std::move(solution), cfl};
}

void finish(OutputDir& dir, const RunConfig& config, const std::string& command, Clock::time_point start) {
  Manifest m;
  m.command = command;
  RunConfig canonical = config;
  // the hash identifies the problem, not the schedule or the destination
  canonical.solver.workers = 1;
  canonical.output_directory = "out";
  m.config_hash = fnv1a_hex(dump_config(canonical));
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  m.workers = config.solver.workers;
  m.files = dir.files();
  dir.write("manifest.json", manifest_json(m));
}

}  // namespace

std::vector<std::string> run_solve(const RunConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const Solved s = solve(config);
  OutputDir dir(config.output_directory);
  for (const auto& [n, slice] : s.solution.values()) {
    if (!config.solver.full_history && n != 0) continue;
    auto out = dir.open(slice_name(n));
    write_slice_csv(out, s.solution, n);
  }
  dir.write("diagnostics.json", diagnostics_json(s.solution.diagnostics(), s.cfl));
  finish(dir, config, "solve", start);
  const NashDiagnostics& d = s.solution.diagnostics();
  log << "solved " << s.solution.policies().size() << " slices on " << s.solution.lattice().size()
      << " nodes; max regret " << format_number(d.max_regret) << ", nodes without pure equilibrium "
      << d.nodes_without_pure_equilibrium << "\n";
  return dir.files();
}

std::vector<std::string> run_sweep(const RunConfig& config, int figure, std::ostream& log) {
  const auto start = Clock::now();
  const SweepSpec sweep = figure_sweep(figure);
  validate_sweep(sweep, Lattice(config.lattice, config.game.regimes()));
  const Solved s = solve(config);
  OutputDir dir(config.output_directory);
  const std::string name = "figure" + std::to_string(figure) + ".csv";
  {
    auto out = dir.open(name);
    write_sweep_csv(out, s.solution, sweep);
  }
  finish(dir, config, "sweep --figure " + std::to_string(figure), start);
  log << "wrote " << dir.path(name) << "\n";
  return dir.files();
}

std::vector<std::string> run_simulate(const RunConfig& config, bool write_paths, std::ostream& log) {
  if (!config.simulation) throw ValidationError({"simulation: section required for simulate"});
  const auto start = Clock::now();
  const SimulationSection& sim = *config.simulation;
  SimConfig sc = sim.config;
  if (sim.clamp_to_lattice) sc.bounds = config.lattice.bounds;

  std::optional<Solved> solved;
  FeedbackPolicy policy;
  if (sim.constant_control) {
    policy = constant_policy(*sim.constant_control);
  } else {
    solved.emplace(solve(config));
    policy = solution_policy(solved->solution);
  }

  OutputDir dir(config.output_directory);
  std::vector<EstimateRow> rows;
  std::optional<std::ofstream> paths;
  if (write_paths) paths = dir.open("paths.csv");
  for (std::size_t n = 0; n < sim.initial_states.size(); ++n) {
    const InitialState& init = sim.initial_states[n];
    const auto results =
        simulate_paths(config.game, policy, init.state, init.regime, sc, config.solver.workers);
    EstimateRow row{init, summarize(config.game, results), std::nullopt};
    if (solved) {
      const Lattice& lat = solved->solution.lattice();
      const std::size_t f = lat.flat(lat.state_to_nearest_node(init.state, init.regime));
      const ValueSlice& v0 = solved->solution.value_slice(0);
      row.grid_value = std::array<double, 2>{v0.values[0][f], v0.values[1][f]};
    }
    rows.push_back(row);
    if (paths) write_paths_csv(*paths, n, results, n == 0);
  }
  {
    auto out = dir.open("estimates.csv");
    write_estimates_csv(out, rows);
  }
  finish(dir, config, "simulate", start);
  for (const auto& r : rows) {
    log << "initial (" << format_number(r.initial.state.x1) << ", " << format_number(r.initial.state.x2)
        << ", " << format_number(r.initial.state.z) << ", regime " << r.initial.regime + 1 << "): V1 ~ "
        << format_number(r.estimate[0].mean) << " +/- " << format_number(r.estimate[0].standard_error)
        << ", V2 ~ " << format_number(r.estimate[1].mean) << " +/- "
        << format_number(r.estimate[1].standard_error) << "\n";
  }
  return dir.files();
}

std::vector<std::string> run_consistency(const RunConfig& config, std::size_t samples,
                                         std::uint64_t seed, std::ostream& log) {
  const auto start = Clock::now();
  const Lattice lattice(config.lattice, config.game.regimes());
  config.game.validate();
  const ControlSet first = player_controls(lattice, config.solver, 0);
  const ControlSet second = player_controls(lattice, config.solver, 1);
  const CflReport cfl = cfl_scan(config.game, lattice, first, second);
  require_cfl(cfl);
  const auto picks = random_consistency_samples(lattice, first, second, samples, seed);
  const ConsistencyReport report =
      check_local_consistency(config.game, lattice, picks, consistency_coefficient(cfl));

  OutputDir dir(config.output_directory);
  {
    auto out = dir.open("consistency.csv");
    write_consistency_csv(out, report);
  }
  const std::string summary = consistency_summary(report);
  dir.write("consistency.json", summary);
  finish(dir, config, "consistency", start);
  log << summary;
  return dir.files();
}

namespace {

void add_common(CLI::App* cmd, std::string& config_path, RunOverrides& o) {
  cmd->add_option("config", config_path, "Configuration file (JSON)")->required();
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_flag("--full-history", o.full_history, "Write every time slice");
  cmd->add_option("--seed", o.seed, "Simulation seed (overrides the config)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov chain approximation solver for the two-insurer investment/reinsurance game"};
  app.name("mcam");
  app.require_subcommand(1);

  std::string config_path;
  RunOverrides overrides;
  int figure = 1;
  bool write_paths = false;
  std::size_t samples = 1000;

  CLI::App* solve_cmd = app.add_subcommand("solve", "Backward sweep; writes value/policy CSV");
  add_common(solve_cmd, config_path, overrides);
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimates under the solved policy");
  add_common(sim_cmd, config_path, overrides);
  sim_cmd->add_flag("--paths", write_paths, "Also write per-path terminal states");
  CLI::App* cons_cmd = app.add_subcommand("consistency", "Local consistency check of the stencils");
  add_common(cons_cmd, config_path, overrides);
  cons_cmd->add_option("--samples", samples, "Number of random interior samples")->check(CLI::PositiveNumber);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Policy along x1 (figure 1) or x2 (figure 2)");
  add_common(sweep_cmd, config_path, overrides);
  sweep_cmd->add_option("--figure", figure, "Figure number")->check(CLI::IsMember({1, 2}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config = load_config(config_path);
    apply_overrides(config, overrides);
    if (solve_cmd->parsed()) {
      run_solve(config, out);
    } else if (sim_cmd->parsed()) {
      run_simulate(config, write_paths, out);
    } else if (cons_cmd->parsed()) {
      run_consistency(config, samples, overrides.seed.value_or(1), out);
    } else {
      run_sweep(config, figure, out);
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    err << "validation failed:\n";
    for (const auto& v : e.violations()) err << "  " << v << "\n";
    return kExitValidation;
  } catch (const CflViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitCfl;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mcam
