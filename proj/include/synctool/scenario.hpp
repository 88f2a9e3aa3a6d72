#pragma once

// Scenario files: JSON with matrices as row-major nested arrays and one-based
// agent indices. The schema is documented in README.md.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "synctool/graph.hpp"
#include "synctool/homog.hpp"
#include "synctool/lti.hpp"
#include "synctool/netsim.hpp"
#include "synctool/protocol.hpp"

namespace synctool::cli {

struct TargetSpec {
  int p = 0;
  int n_q = 0;
  Matrix Gamma;
};

struct Scenario {
  std::string name;
  std::vector<lti::AgentModel> agents;
  int nodes = 0;
  std::vector<graph::Edge> edges;  // zero-based internally
  protocol::SyncMode mode = protocol::SyncMode::kOutputSync;
  std::vector<int> root_set;       // zero-based
  std::optional<homog::Exosystem> exosystem;
  std::optional<TargetSpec> target;  // empty means "auto"
  protocol::GainSpec gains;
  std::optional<double> eps;
  std::vector<double> eps_list;
  std::vector<netsim::AgentDisturbance> disturbances;
  double horizon = 50.0;
  double output_dt = 0.05;
  std::uint64_t seed = 1;
};

bool operator==(const Scenario& a, const Scenario& b);

Scenario parse_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

graph::CommGraph scenario_graph(const Scenario& s);

// "auto": Gamma = 0 with n_q = n_q0 for output synchronization, the remodeled
// exosystem for regulation.
homog::TargetModel scenario_target(const Scenario& s);

struct Synthesis {
  homog::TargetModel target;
  std::vector<homog::Design> designs;
  netsim::NetworkDesign network;
};

Synthesis synthesize(const Scenario& s);

netsim::DisturbanceSpec scenario_disturbances(const Scenario& s);

}  // namespace synctool::cli
