#include "synctool/scenario.hpp"

#include <fstream>
#include <sstream>

#include "synctool/errors.hpp"

namespace synctool::cli {

using nlohmann::json;

namespace {

Error invalid(const std::string& what) { return Error(ErrorKind::kContract, "SCENARIO_INVALID", what); }

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::kContract, "MISSING_FIELD", where + ": missing required field '" + key + "'");
  }
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw invalid(where + ": expected a number");
  return j.get<double>();
}

Matrix matrix(const json& j, const std::string& where) {
  if (!j.is_array()) throw invalid(where + ": expected a row-major nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  if (!j.front().is_array()) throw invalid(where + ": expected a row-major nested array");
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      std::ostringstream os;
      os << where << ": row " << r + 1 << " must have " << cols << " entries";
      throw invalid(os.str());
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number(row.at(static_cast<std::size_t>(c)), where);
    }
  }
  return m;
}

Vector vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw invalid(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = number(j.at(k), where);
  return v;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

std::vector<numlin::Complex> poles(const json& j, const std::string& where) {
  if (!j.is_array()) throw invalid(where + ": expected an array of poles");
  std::vector<numlin::Complex> out;
  for (const json& e : j) {
    if (e.is_number()) {
      out.emplace_back(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2) {
      out.emplace_back(number(e[0], where), number(e[1], where));
    } else {
      throw invalid(where + ": each pole is a number or a [re, im] pair");
    }
  }
  return out;
}

json poles_to_json(const std::vector<numlin::Complex>& ps) {
  json out = json::array();
  for (const auto& s : ps) {
    if (s.imag() == 0.0) {
      out.push_back(s.real());
    } else {
      out.push_back(json::array({s.real(), s.imag()}));
    }
  }
  return out;
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
  if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols)) {
    std::ostringstream os;
    os << where << ": expected shape " << (rows >= 0 ? std::to_string(rows) : std::string("*")) << " x "
       << (cols >= 0 ? std::to_string(cols) : std::string("*")) << ", got " << m.rows() << " x " << m.cols();
    throw dimension_error(os.str());
  }
}

lti::AgentModel agent_from_json(const json& j, std::size_t index) {
  const std::string where = "agents[" + std::to_string(index + 1) + "]";
  const Matrix a = matrix(require(j, "A", where), where + ".A");
  const auto n = a.rows();
  expect_shape(a, n, n, where + ".A");
  if (n == 0) throw dimension_error(where + ".A: agent needs at least one state");
  const Matrix b = matrix(require(j, "B", where), where + ".B");
  expect_shape(b, n, -1, where + ".B");
  const Matrix c = matrix(require(j, "C", where), where + ".C");
  expect_shape(c, -1, n, where + ".C");
  const Matrix e = matrix(require(j, "E", where), where + ".E");
  expect_shape(e, n, -1, where + ".E");
  Matrix cm = Matrix::Identity(n, n);
  if (j.contains("Cm")) {
    cm = matrix(j.at("Cm"), where + ".Cm");
    expect_shape(cm, -1, n, where + ".Cm");
  }
  return lti::AgentModel(a, b, c, e, cm);
}

netsim::AgentDisturbance disturbance_from_json(const json& j, std::size_t index) {
  const std::string where = "disturbances[" + std::to_string(index + 1) + "]";
  netsim::AgentDisturbance d;
  const json& kind = require(j, "kind", where);
  if (!kind.is_string()) throw invalid(where + ".kind: expected a string");
  const auto k = kind.get<std::string>();
  using Kind = netsim::AgentDisturbance::Kind;
  if (k == "zero") {
    d.kind = Kind::kZero;
  } else if (k == "sinusoid") {
    d.kind = Kind::kSinusoid;
    d.frequency = number(require(j, "frequency", where), where + ".frequency");
    if (j.contains("amplitude")) d.amplitude = number(j.at("amplitude"), where + ".amplitude");
    if (j.contains("phase")) d.phase = number(j.at("phase"), where + ".phase");
  } else if (k == "held_random") {
    d.kind = Kind::kHeldRandom;
    d.bound = number(require(j, "bound", where), where + ".bound");
    if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("hold")) d.hold = number(j.at("hold"), where + ".hold");
  } else {
    throw invalid(where + ".kind: expected zero, sinusoid or held_random");
  }
  return d;
}

json disturbance_to_json(const netsim::AgentDisturbance& d) {
  using Kind = netsim::AgentDisturbance::Kind;
  switch (d.kind) {
    case Kind::kZero:
      return json{{"kind", "zero"}};
    case Kind::kSinusoid:
      return json{{"kind", "sinusoid"}, {"frequency", d.frequency}, {"amplitude", d.amplitude}, {"phase", d.phase}};
    case Kind::kHeldRandom:
      return json{{"kind", "held_random"}, {"bound", d.bound}, {"seed", d.seed}, {"hold", d.hold}};
  }
  return json{};
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same(*a, *b);
}

bool same(const netsim::AgentDisturbance& a, const netsim::AgentDisturbance& b) {
  return a.kind == b.kind && a.frequency == b.frequency && a.amplitude == b.amplitude && a.phase == b.phase &&
         a.bound == b.bound && a.seed == b.seed && a.hold == b.hold;
}

}  // namespace

bool operator==(const Scenario& a, const Scenario& b) {
  if (a.name != b.name || a.nodes != b.nodes || a.mode != b.mode || a.root_set != b.root_set) return false;
  if (a.agents.size() != b.agents.size() || a.edges.size() != b.edges.size()) return false;
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    const auto& x = a.agents[i];
    const auto& y = b.agents[i];
    if (!same(x.dyn.A, y.dyn.A) || !same(x.dyn.B, y.dyn.B) || !same(x.dyn.C, y.dyn.C) || !same(x.E, y.E) ||
        !same(x.Cm, y.Cm)) {
      return false;
    }
  }
  for (std::size_t k = 0; k < a.edges.size(); ++k) {
    const auto& x = a.edges[k];
    const auto& y = b.edges[k];
    if (x.from != y.from || x.to != y.to || x.weight != y.weight) return false;
  }
  if (a.exosystem.has_value() != b.exosystem.has_value()) return false;
  if (a.exosystem && (!same(a.exosystem->Ar, b.exosystem->Ar) || !same(a.exosystem->Cr, b.exosystem->Cr) ||
                      !same(Matrix(a.exosystem->x0), Matrix(b.exosystem->x0)))) {
    return false;
  }
  if (a.target.has_value() != b.target.has_value()) return false;
  if (a.target && (a.target->p != b.target->p || a.target->n_q != b.target->n_q ||
                   !same(a.target->Gamma, b.target->Gamma))) {
    return false;
  }
  const auto& ga = a.gains;
  const auto& gb = b.gains;
  if (!same(ga.F, gb.F) || !same(ga.K1, gb.K1) || !same(ga.K2, gb.K2) || ga.F_poles != gb.F_poles ||
      ga.K2_poles != gb.K2_poles || ga.alpha_margin != gb.alpha_margin) {
    return false;
  }
  if (a.eps != b.eps || a.eps_list != b.eps_list || a.horizon != b.horizon || a.output_dt != b.output_dt ||
      a.seed != b.seed || a.disturbances.size() != b.disturbances.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.disturbances.size(); ++i) {
    if (!same(a.disturbances[i], b.disturbances[i])) return false;
  }
  return true;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw invalid("scenario: expected a JSON object");
  Scenario s;
  if (j.contains("name")) s.name = j.at("name").get<std::string>();

  const json& agents = require(j, "agents", "scenario");
  if (!agents.is_array() || agents.empty()) throw invalid("agents: expected a nonempty array");
  for (std::size_t i = 0; i < agents.size(); ++i) s.agents.push_back(agent_from_json(agents[i], i));
  const auto p = s.agents.front().outputs();
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    if (s.agents[i].outputs() != p) {
      std::ostringstream os;
      os << "agents[" << i + 1 << "].C: expected " << p << " rows (same output size as agent 1), got "
         << s.agents[i].outputs();
      throw dimension_error(os.str());
    }
  }
  const int n_agents = static_cast<int>(s.agents.size());

  const json& g = require(j, "graph", "scenario");
  s.nodes = g.contains("nodes") ? g.at("nodes").get<int>() : n_agents;
  if (s.nodes != n_agents) {
    std::ostringstream os;
    os << "graph.nodes: expected " << n_agents << " (one per agent), got " << s.nodes;
    throw dimension_error(os.str());
  }
  const json& edges = require(g, "edges", "graph");
  if (!edges.is_array()) throw invalid("graph.edges: expected an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string where = "graph.edges[" + std::to_string(k + 1) + "]";
    graph::Edge e;
    e.from = require(edges[k], "from", where).get<int>() - 1;
    e.to = require(edges[k], "to", where).get<int>() - 1;
    e.weight = edges[k].contains("weight") ? number(edges[k].at("weight"), where + ".weight") : 1.0;
    if (e.from < 0 || e.from >= n_agents || e.to < 0 || e.to >= n_agents) {
      throw invalid(where + ": agent index outside 1.." + std::to_string(n_agents));
    }
    s.edges.push_back(e);
  }

  const std::string mode = j.contains("mode") ? j.at("mode").get<std::string>() : "output_sync";
  if (mode == "output_sync") {
    s.mode = protocol::SyncMode::kOutputSync;
  } else if (mode == "regulated") {
    s.mode = protocol::SyncMode::kRegulated;
  } else {
    throw invalid("mode: expected output_sync or regulated");
  }
  if (j.contains("root_set")) {
    for (const json& r : j.at("root_set")) {
      const int m = r.get<int>() - 1;
      if (m < 0 || m >= n_agents) throw invalid("root_set: agent index outside 1.." + std::to_string(n_agents));
      s.root_set.push_back(m);
    }
  }
  if (j.contains("exosystem")) {
    const json& x = j.at("exosystem");
    homog::Exosystem exo;
    exo.Ar = matrix(require(x, "A", "exosystem"), "exosystem.A");
    expect_shape(exo.Ar, exo.Ar.rows(), exo.Ar.rows(), "exosystem.A");
    exo.Cr = matrix(require(x, "C", "exosystem"), "exosystem.C");
    expect_shape(exo.Cr, p, exo.Ar.rows(), "exosystem.C");
    exo.x0 = vector(require(x, "x0", "exosystem"), "exosystem.x0");
    if (exo.x0.size() != exo.Ar.rows()) {
      throw dimension_error("exosystem.x0: expected " + std::to_string(exo.Ar.rows()) + " entries");
    }
    s.exosystem = exo;
  }
  if (s.mode == protocol::SyncMode::kRegulated) {
    if (s.root_set.empty()) throw Error(ErrorKind::kContract, "MISSING_FIELD", "regulated mode needs root_set");
    if (!s.exosystem) throw Error(ErrorKind::kContract, "MISSING_FIELD", "regulated mode needs exosystem");
  }

  if (j.contains("target") && !(j.at("target").is_string() && j.at("target").get<std::string>() == "auto")) {
    const json& t = j.at("target");
    TargetSpec spec;
    spec.p = require(t, "p", "target").get<int>();
    spec.n_q = require(t, "n_q", "target").get<int>();
    spec.Gamma = matrix(require(t, "Gamma", "target"), "target.Gamma");
    if (spec.p != p) throw dimension_error("target.p: expected " + std::to_string(p) + " (agent output size)");
    expect_shape(spec.Gamma, spec.p, spec.p * spec.n_q, "target.Gamma");
    s.target = spec;
  }

  if (j.contains("gains")) {
    const json& g2 = j.at("gains");
    if (g2.contains("F") && g2.contains("F_poles")) throw invalid("gains: give F or F_poles, not both");
    if (g2.contains("K2") && g2.contains("K2_poles")) throw invalid("gains: give K2 or K2_poles, not both");
    if (g2.contains("F")) s.gains.F = matrix(g2.at("F"), "gains.F");
    if (g2.contains("F_poles")) s.gains.F_poles = poles(g2.at("F_poles"), "gains.F_poles");
    if (g2.contains("K1")) s.gains.K1 = matrix(g2.at("K1"), "gains.K1");
    if (g2.contains("K2")) s.gains.K2 = matrix(g2.at("K2"), "gains.K2");
    if (g2.contains("K2_poles")) s.gains.K2_poles = poles(g2.at("K2_poles"), "gains.K2_poles");
    if (g2.contains("alpha_margin")) s.gains.alpha_margin = number(g2.at("alpha_margin"), "gains.alpha_margin");
  }

  if (j.contains("eps")) s.eps = number(j.at("eps"), "eps");
  if (j.contains("eps_list")) {
    const Vector v = vector(j.at("eps_list"), "eps_list");
    s.eps_list.assign(v.data(), v.data() + v.size());
  }
  if (j.contains("disturbances")) {
    const json& d = j.at("disturbances");
    if (!d.is_array() || static_cast<int>(d.size()) != n_agents) {
      throw dimension_error("disturbances: expected one entry per agent (" + std::to_string(n_agents) + ")");
    }
    for (std::size_t i = 0; i < d.size(); ++i) s.disturbances.push_back(disturbance_from_json(d[i], i));
  }
  if (j.contains("horizon")) s.horizon = number(j.at("horizon"), "horizon");
  if (j.contains("output_dt")) s.output_dt = number(j.at("output_dt"), "output_dt");
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (!(s.horizon > 0.0) || !(s.output_dt > 0.0)) throw invalid("horizon and output_dt must be positive");
  return s;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kContract, "FILE_NOT_FOUND", "cannot open scenario file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kContract, "MALFORMED_SCENARIO", std::string("invalid JSON: ") + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kContract, "MALFORMED_SCENARIO", std::string("wrong field type: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  json agents = json::array();
  for (const auto& a : s.agents) {
    agents.push_back(json{{"A", to_json(a.dyn.A)}, {"B", to_json(a.dyn.B)}, {"C", to_json(a.dyn.C)},
                          {"E", to_json(a.E)}, {"Cm", to_json(a.Cm)}});
  }
  j["agents"] = agents;
  json edges = json::array();
  for (const auto& e : s.edges) edges.push_back(json{{"from", e.from + 1}, {"to", e.to + 1}, {"weight", e.weight}});
  j["graph"] = json{{"nodes", s.nodes}, {"edges", edges}};
  j["mode"] = s.mode == protocol::SyncMode::kOutputSync ? "output_sync" : "regulated";
  if (!s.root_set.empty()) {
    json r = json::array();
    for (int m : s.root_set) r.push_back(m + 1);
    j["root_set"] = r;
  }
  if (s.exosystem) {
    j["exosystem"] = json{{"A", to_json(s.exosystem->Ar)}, {"C", to_json(s.exosystem->Cr)},
                          {"x0", to_json(s.exosystem->x0)}};
  }
  if (s.target) {
    j["target"] = json{{"p", s.target->p}, {"n_q", s.target->n_q}, {"Gamma", to_json(s.target->Gamma)}};
  } else {
    j["target"] = "auto";
  }
  json g;
  if (s.gains.F) g["F"] = to_json(*s.gains.F);
  if (!s.gains.F_poles.empty()) g["F_poles"] = poles_to_json(s.gains.F_poles);
  if (s.gains.K1) g["K1"] = to_json(*s.gains.K1);
  if (s.gains.K2) g["K2"] = to_json(*s.gains.K2);
  if (!s.gains.K2_poles.empty()) g["K2_poles"] = poles_to_json(s.gains.K2_poles);
  g["alpha_margin"] = s.gains.alpha_margin;
  j["gains"] = g;
  if (s.eps) j["eps"] = *s.eps;
  if (!s.eps_list.empty()) j["eps_list"] = s.eps_list;
  if (!s.disturbances.empty()) {
    json d = json::array();
    for (const auto& x : s.disturbances) d.push_back(disturbance_to_json(x));
    j["disturbances"] = d;
  }
  j["horizon"] = s.horizon;
  j["output_dt"] = s.output_dt;
  j["seed"] = s.seed;
  return j;
}

graph::CommGraph scenario_graph(const Scenario& s) { return graph::CommGraph::from_edges(s.nodes, s.edges); }

homog::TargetModel scenario_target(const Scenario& s) {
  if (s.target) return homog::build_target(s.target->p, s.target->n_q, s.target->Gamma);
  if (s.mode == protocol::SyncMode::kRegulated) return homog::remodel_exosystem(*s.exosystem, s.agents);
  const int p = static_cast<int>(s.agents.front().outputs());
  const int nq = lti::n_q0(s.agents);
  return homog::build_target(p, nq, Matrix::Zero(p, p * nq));
}

Synthesis synthesize(const Scenario& s) {
  Synthesis out;
  out.target = scenario_target(s);
  for (const auto& a : s.agents) out.designs.push_back(homog::design_precompensator(a, out.target));
  auto& net = out.network;
  for (const auto& d : out.designs) net.agents.push_back(d.comp);
  net.params = protocol::design_gains(out.target, s.gains);
  net.graph = scenario_graph(s);
  net.mode = s.mode;
  if (!s.root_set.empty()) net.root = graph::RootSet(s.nodes, s.root_set);
  net.exo = s.exosystem;
  return out;
}

netsim::DisturbanceSpec scenario_disturbances(const Scenario& s) {
  netsim::DisturbanceSpec d = netsim::DisturbanceSpec::zero(static_cast<int>(s.agents.size()));
  if (!s.disturbances.empty()) d.agents = s.disturbances;
  return d;
}

}  // namespace synctool::cli
