#include "synctool/run.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "synctool/numlin.hpp"
#include "synctool/scenario.hpp"

namespace synctool::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<double> kDefaultSweep{0.5, 0.2, 0.1, 0.05};
constexpr double kDefaultEps = 0.1;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kContract, "IO_ERROR", "cannot write " + tmp.string());
    out << body;
    if (!out) throw Error(ErrorKind::kContract, "IO_ERROR", "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path out_path(const RunOptions& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return fs::path(opts.out_dir) / name;
}

json mat(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

double pick_eps(const Scenario& s, const RunOptions& opts) {
  if (opts.eps) return *opts.eps;
  if (s.eps) return *s.eps;
  return kDefaultEps;
}

std::string yes(bool b) { return b ? "yes" : "no"; }

void cmd_check(const Scenario& s, std::ostream& log) {
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto rep = lti::structural_analysis(s.agents[i]);
    log << "agent " << i + 1 << ": stabilizable=" << yes(rep.stabilizable) << " detectable=" << yes(rep.detectable)
        << " right_invertible=" << yes(rep.right_invertible) << " infinite_zero_orders=[";
    for (std::size_t k = 0; k < rep.infinite_zero_orders.size(); ++k) {
      log << (k ? "," : "") << rep.infinite_zero_orders[k];
    }
    log << "]\n";
  }
  log << "n_q0 = " << lti::n_q0(s.agents) << "\n";
  const auto g = scenario_graph(s);
  const bool tree = graph::has_spanning_tree(g);
  log << "graph: nodes=" << g.size() << " edges=" << g.edges().size() << " spanning_tree=" << yes(tree) << "\n";
  if (s.mode == protocol::SyncMode::kOutputSync) {
    if (!tree) throw Error(ErrorKind::kPrecondition, "NO_SPANNING_TREE", "the communication graph has no directed spanning tree");
  } else {
    const bool covers = graph::root_set_covers(g, graph::RootSet(s.nodes, s.root_set));
    log << "root_set_covers=" << yes(covers) << "\n";
    if (!covers) throw Error(ErrorKind::kPrecondition, "ROOT_SET_NOT_COVERING", "some agent is not reachable from the root set");
  }
  log << "check: ok\n";
}

void cmd_synth(const Scenario& s, const RunOptions& opts, std::ostream& log) {
  const auto syn = synthesize(s);
  const auto& pr = syn.network.params;
  json j;
  j["target"] = json{{"p", syn.target.p()}, {"n_q", syn.target.n_q()}, {"Gamma", mat(syn.target.gamma())}};
  j["gains"] = json{{"F", mat(pr.F)}, {"K1", mat(pr.K1)}, {"K2", mat(pr.K2)}, {"K", mat(pr.K())},
                    {"alpha", pr.alpha}, {"P", mat(pr.P)}, {"Psi", mat(pr.Psi)}, {"warnings", pr.warnings}};
  json agents = json::array();
  for (const auto& d : syn.designs) {
    const auto rep = homog::verify_homogenization(d.comp, syn.target);
    agents.push_back(json{{"G", mat(d.pre.G)}, {"H1", mat(d.pre.H1)}, {"H2", mat(d.pre.H2)}, {"Q", mat(d.pre.Q)},
                          {"R1", mat(d.pre.R1)}, {"R2", mat(d.pre.R2)},
                          {"markov_deviation", rep.max_deviation},
                          {"residual_states", d.comp.internal_stable_part.states()}});
  }
  j["precompensators"] = agents;
  write_file(out_path(opts, "synthesis.json"), j.dump(2) + "\n");
  for (const auto& w : pr.warnings) log << "warning: " << w << "\n";
  log << "synth: alpha = " << pr.alpha << ", " << syn.designs.size() << " precompensators written\n";
}

void cmd_analyze(const Scenario& s, const RunOptions& opts, std::ostream& log) {
  const auto syn = synthesize(s);
  const double eps = pick_eps(s, opts);
  const auto cl = netsim::assemble_closed_loop(syn.network, eps);
  const double abscissa = netsim::closed_loop_abscissa(cl);
  const double hinf = netsim::closed_loop_hinf(cl);
  const double eps_star = netsim::estimate_eps_star(syn.network);
  std::string body = "metric,value\n";
  body += "eps," + num(eps) + "\n";
  body += "abscissa," + num(abscissa) + "\n";
  body += "hinf," + num(hinf) + "\n";
  body += "gamma_hat," + num(hinf / eps) + "\n";
  body += "eps_star," + num(eps_star) + "\n";
  write_file(out_path(opts, "analysis.csv"), body);
  log << "analyze: error basis " << cl.error_basis << "; abscissa " << abscissa << ", hinf " << hinf << "\n";
}

void cmd_simulate(const Scenario& s, const RunOptions& opts, std::ostream& log) {
  const auto syn = synthesize(s);
  const double eps = pick_eps(s, opts);
  const std::uint64_t seed = opts.seed ? *opts.seed : s.seed;
  const auto cl = netsim::assemble_closed_loop(syn.network, eps);
  const auto res = netsim::simulate(cl, scenario_disturbances(s), netsim::initial_state(cl, seed), s.horizon, s.output_dt);

  const int n_agents = cl.agents();
  const int p = cl.p;
  auto label = [p](const std::string& base, int i, int c) {
    return p == 1 ? base + std::to_string(i + 1) : base + std::to_string(i + 1) + "_" + std::to_string(c + 1);
  };
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < n_agents; ++i)
    for (int c = 0; c < p; ++c) os << "," << label("y", i, c);
  for (int c = 0; c < res.yr.cols(); ++c) os << "," << (p == 1 ? std::string("yr") : "yr_" + std::to_string(c + 1));
  const int n_err = static_cast<int>(res.errors.cols()) / p;
  for (int i = 0; i < n_err; ++i)
    for (int c = 0; c < p; ++c) os << "," << label("e", i, c);
  os << "\n";
  for (std::size_t k = 0; k < res.t.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    os << num(res.t[k]);
    for (Eigen::Index c = 0; c < res.y.cols(); ++c) os << "," << num(res.y(r, c));
    for (Eigen::Index c = 0; c < res.yr.cols(); ++c) os << "," << num(res.yr(r, c));
    for (Eigen::Index c = 0; c < res.errors.cols(); ++c) os << "," << num(res.errors(r, c));
    os << "\n";
  }
  write_file(out_path(opts, "trajectories.csv"), os.str());
  std::string body = "metric,value\n";
  body += "eps," + num(eps) + "\n";
  body += "abscissa," + num(netsim::closed_loop_abscissa(cl)) + "\n";
  body += "tail_max," + num(res.tail_max) + "\n";
  body += "tail_rms," + num(res.tail_rms) + "\n";
  write_file(out_path(opts, "metrics.csv"), body);
  log << "simulate: eps " << eps << ", tail_max " << res.tail_max << ", tail_rms " << res.tail_rms << "\n";
}

void cmd_sweep(const Scenario& s, const RunOptions& opts, std::ostream& log) {
  const auto syn = synthesize(s);
  std::vector<double> eps_list = s.eps_list.empty() ? kDefaultSweep : s.eps_list;
  if (opts.eps) eps_list = {*opts.eps};
  netsim::SimSetup setup;
  setup.disturbances = scenario_disturbances(s);
  setup.seed = opts.seed ? *opts.seed : s.seed;
  setup.horizon = s.horizon;
  setup.output_dt = s.output_dt;
  const auto rows = netsim::epsilon_sweep(syn.network, eps_list, setup);
  std::string body = "eps,abscissa,hinf,tail_max,tail_rms,gamma_hat\n";
  for (const auto& r : rows) {
    body += num(r.eps) + "," + num(r.abscissa) + "," + num(r.hinf) + "," + num(r.tail_max) + "," + num(r.tail_rms) +
            "," + num(r.gamma_hat) + "\n";
    if (!r.stable) log << "sweep: eps " << r.eps << " is unstable (abscissa " << r.abscissa << ")\n";
  }
  write_file(out_path(opts, "sweep.csv"), body);
  log << "sweep: " << rows.size() << " rows written\n";
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension:
    case ErrorKind::kContract:
    case ErrorKind::kPrecondition:
      return 2;
    case ErrorKind::kSynthesis:
    case ErrorKind::kUnsupported:
      return 3;
    case ErrorKind::kNumerical:
      return 4;
  }
  return 1;
}

void run(const std::string& command, const std::string& scenario_path, const RunOptions& opts, std::ostream& log) {
  const Scenario s = parse_scenario(scenario_path);
  if (command == "check") {
    cmd_check(s, log);
  } else if (command == "synth") {
    cmd_synth(s, opts, log);
  } else if (command == "analyze") {
    cmd_analyze(s, opts, log);
  } else if (command == "simulate") {
    cmd_simulate(s, opts, log);
  } else if (command == "sweep") {
    cmd_sweep(s, opts, log);
  } else {
    throw Error(ErrorKind::kContract, "UNKNOWN_COMMAND", "unknown command '" + command + "'");
  }
}

}  // namespace synctool::cli
