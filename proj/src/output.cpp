#include "mcam/output.hpp"

#include <cstdio>

#include "json.hpp"
#include "mcam/errors.hpp"

namespace mcam {

const char* const kSliceHeader = "t,regime,x1,x2,z,V1,V2,a1,b1,a2,b2,diagnostic";

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string n(double v) { return format_number(v); }
std::string n(std::size_t v) { return std::to_string(v); }

}  // namespace

void write_slice_csv(std::ostream& out, const Solution& solution, std::size_t slice) {
  const Lattice& lat = solution.lattice();
  const ValueSlice& values = solution.value_slice(slice);
  const bool terminal = slice >= solution.policies().size();
  out << kSliceHeader << '\n';
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const NodeIndex node = lat.node(f);
    const State s = lat.node_to_state(node);
    const std::string head = n(values.time) + ',' + n(node.regime + 1) + ',' + n(s.x1) + ',' +
                             n(s.x2) + ',' + n(s.z) + ',' + n(values.values[0][f]) + ',' +
                             n(values.values[1][f]);
    if (terminal) {
      out << head << ",,,,,terminal\n";
      continue;
    }
    const JointControl u = solution.control_at(slice, f);
    out << head << ',' << n(u.a1) << ',' << n(u.b1) << ',' << n(u.a2) << ',' << n(u.b2) << ','
        << to_string(solution.policies()[slice].status[f]) << '\n';
  }
}

std::string diagnostics_json(const NashDiagnostics& d, const CflReport& cfl) {
  nlohmann::ordered_json j;
  j["best_response_iterations"] = d.best_response_iterations;
  j["max_regret"] = d.max_regret;
  j["nodes_without_pure_equilibrium"] = d.nodes_without_pure_equilibrium;
  j["nodes_verified_exhaustive"] = d.nodes_verified_exhaustive;
  j["sampled_nodes"] = d.sampled_nodes;
  j["sampled_max_regret"] = d.sampled_max_regret;
  j["cfl_min_self_probability"] = cfl.worst_self_probability;
  j["cfl_max_time_step"] = cfl.max_time_step;
  return j.dump(2) + "\n";
}

SweepSpec figure_sweep(int figure) {
  if (figure != 1 && figure != 2) throw DomainError("figure must be 1 or 2");
  SweepSpec s;
  s.figure = figure;
  s.vary_dim = figure == 1 ? 0 : 1;
  s.fixed = figure == 1 ? State{0.0, 0.0, 1.01} : State{1.0, 0.0, 1.01};
  s.slice = 0;
  return s;
}

void validate_sweep(const SweepSpec& sweep, const Lattice& lattice) {
  std::vector<std::string> out;
  const char* names[3] = {"x1", "x2", "z"};
  const double fixed[3] = {sweep.fixed.x1, sweep.fixed.x2, sweep.fixed.z};
  for (std::size_t d = 0; d < 3; ++d) {
    if (d == sweep.vary_dim) continue;
    if (!lattice.contains(d, fixed[d])) {
      out.push_back(std::string("sweep.") + names[d] + ": fixed value " + format_number(fixed[d]) +
                    " lies outside the lattice bounds");
    }
  }
  if (sweep.vary_dim > 1) out.push_back("sweep: only x1 or x2 can vary");
  if (sweep.slice >= lattice.steps()) out.push_back("sweep: slice has no policy");
  if (!out.empty()) throw ValidationError(std::move(out));
}

void write_sweep_csv(std::ostream& out, const Solution& solution, const SweepSpec& sweep) {
  const Lattice& lat = solution.lattice();
  validate_sweep(sweep, lat);
  out << "t,x1,x2,z";
  for (std::size_t i = 0; i < lat.regimes(); ++i) {
    const std::string r = std::to_string(i + 1);
    out << ",a1_regime" << r << ",b1_regime" << r << ",a2_regime" << r << ",b2_regime" << r;
  }
  out << '\n';
  const double t = lat.time_of(sweep.slice);
  for (std::size_t j = 0; j < lat.count(sweep.vary_dim); ++j) {
    State s = sweep.fixed;
    s.surplus(sweep.vary_dim) = lat.coordinate(sweep.vary_dim, j);
    NodeIndex node = lat.state_to_nearest_node(s, 0);
    const State at = lat.node_to_state(node);
    out << n(t) << ',' << n(at.x1) << ',' << n(at.x2) << ',' << n(at.z);
    for (std::size_t i = 0; i < lat.regimes(); ++i) {
      node.regime = i;
      const JointControl u = solution.control_at(sweep.slice, lat.flat(node));
      out << ',' << n(u.a1) << ',' << n(u.b1) << ',' << n(u.a2) << ',' << n(u.b2);
    }
    out << '\n';
  }
}

void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows) {
  out << "x1,x2,z,regime,player,mean,standard_error,path_count,grid_value\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& e = r.estimate[k];
      out << n(r.initial.state.x1) << ',' << n(r.initial.state.x2) << ',' << n(r.initial.state.z)
          << ',' << n(r.initial.regime + 1) << ',' << n(k + 1) << ',' << n(e.mean) << ','
          << n(e.standard_error) << ',' << n(e.path_count) << ','
          << (r.grid_value ? n((*r.grid_value)[k]) : std::string()) << '\n';
    }
  }
}

void write_paths_csv(std::ostream& out, std::size_t initial_index, const std::vector<PathResult>& paths,
                     bool header) {
  if (header) out << "initial,path,x1,x2,z,regime,claims1,claims2\n";
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const PathResult& r = paths[p];
    out << n(initial_index) << ',' << n(p) << ',' << n(r.terminal.x1) << ',' << n(r.terminal.x2)
        << ',' << n(r.terminal.z) << ',' << n(r.final_regime + 1) << ',' << n(r.claims[0]) << ','
        << n(r.claims[1]) << '\n';
  }
}

void write_consistency_csv(std::ostream& out, const ConsistencyReport& report) {
  out << "j1,j2,jz,regime,slice,player,a1,b1,a2,b2,mean_error_own,mean_error_index,"
         "variance_error,variance_bound,self_probability\n";
  for (const auto& r : report.rows) {
    const auto& s = r.sample;
    out << n(s.node.j[0]) << ',' << n(s.node.j[1]) << ',' << n(s.node.j[2]) << ','
        << n(s.node.regime + 1) << ',' << n(s.slice) << ',' << n(s.player + 1) << ','
        << n(s.control.a1) << ',' << n(s.control.b1) << ',' << n(s.control.a2) << ','
        << n(s.control.b2) << ',' << n(r.mean_error_own) << ',' << n(r.mean_error_index) << ','
        << n(r.variance_error) << ',' << n(r.variance_bound) << ',' << n(r.self_probability) << '\n';
  }
}

std::string consistency_summary(const ConsistencyReport& report) {
  nlohmann::ordered_json j;
  j["mean_error"] = report.mean_error;
  j["variance_error"] = report.variance_error;
  j["coefficient_bound"] = report.coefficient_bound;
  j["variance_tolerance"] = report.variance_tolerance;
  j["cfl_margin"] = report.cfl_margin;
  j["samples_checked"] = report.rows.size();
  j["samples_skipped_boundary"] = report.skipped_boundary;
  return j.dump(2) + "\n";
}

std::string manifest_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config_hash_fnv1a64"] = m.config_hash;
  j["wall_seconds"] = m.wall_seconds;
  j["workers"] = m.workers;
  j["files"] = m.files;
  return j.dump(2) + "\n";
}

}  // namespace mcam
