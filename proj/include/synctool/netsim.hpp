#pragma once

// Networked closed loop: compensated agents, protocol blocks, graph coupling
// and (in regulated mode) the exosystem. State order is
//   [agent 1 .. agent N | protocol 1 .. protocol N | exosystem].

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synctool/graph.hpp"
#include "synctool/homog.hpp"
#include "synctool/protocol.hpp"

namespace synctool::netsim {

using protocol::SyncMode;

struct NetworkDesign {
  std::vector<homog::CompensatedAgent> agents;
  protocol::ProtocolParams params;
  graph::CommGraph graph{1};
  SyncMode mode = SyncMode::kOutputSync;
  std::optional<graph::RootSet> root;
  std::optional<homog::Exosystem> exo;
};

struct ClosedLoopSystem {
  // Input: stacked disturbances; output: stacked errors (y_i - y_N for i < N,
  // or y_i - y_r).
  StateSpace full;
  Matrix outputs;            // stacked y_i as a function of the full state
  Matrix reference;          // y_r rows (regulated mode), else 0 x n
  // Realization of the disturbance-to-error map with the synchronized motion
  // (output-sync) or the exosystem (regulated) factored out.
  StateSpace error_dynamics;
  SyncMode mode = SyncMode::kOutputSync;
  std::string error_basis;
  double eps = 1.0;
  int p = 0;
  std::vector<Eigen::Index> agent_offset, agent_states, plant_states;
  std::vector<Eigen::Index> protocol_offset;
  std::vector<Eigen::Index> disturbance_offset, disturbance_width;
  Eigen::Index exo_offset = -1;
  Vector exo_x0;

  int agents() const { return static_cast<int>(agent_offset.size()); }
};

ClosedLoopSystem assemble_closed_loop(const std::vector<homog::CompensatedAgent>& agents,
                                      const protocol::ProtocolParams& params, double eps,
                                      const graph::CommGraph& g, SyncMode mode,
                                      const std::optional<graph::RootSet>& root,
                                      const std::optional<homog::Exosystem>& exo);
ClosedLoopSystem assemble_closed_loop(const NetworkDesign& design, double eps);

double closed_loop_abscissa(const ClosedLoopSystem& cl);
double closed_loop_hinf(const ClosedLoopSystem& cl, double tol = 1e-6);

// Largest eps on a 1e-3 bisection grid such that eps, eps/2, eps/4, ...
// down to 1e-3 all give a Hurwitz error realization.
double estimate_eps_star(const NetworkDesign& design, double eps_hi = 1.0);

struct AgentDisturbance {
  enum class Kind { kZero, kSinusoid, kHeldRandom };
  Kind kind = Kind::kZero;
  double frequency = 1.0;
  double amplitude = 1.0;
  double phase = 0.0;
  double bound = 1.0;
  std::uint64_t seed = 0;
  double hold = 0.01;
};

// One entry per agent; the same waveform drives every channel of an agent
// (random channels draw independent streams).
struct DisturbanceSpec {
  std::vector<AgentDisturbance> agents;
  static DisturbanceSpec zero(int n_agents);
};

struct SimResult {
  std::vector<double> t;
  Matrix y;       // rows: time, columns: stacked agent outputs
  Matrix yr;      // rows: time, columns: reference outputs (regulated mode)
  Matrix errors;  // rows: time, columns: stacked error basis
  double tail_max = 0.0;
  double tail_rms = 0.0;
};

// Plant states uniform in [-1, 1] from `seed`; pre-compensator and protocol
// states zero; exosystem at its x0.
Vector initial_state(const ClosedLoopSystem& cl, std::uint64_t seed);

SimResult simulate(const ClosedLoopSystem& cl, const DisturbanceSpec& dist, const Vector& x0,
                   double horizon, double output_dt);

struct SimSetup {
  DisturbanceSpec disturbances;
  std::uint64_t seed = 1;
  double horizon = 50.0;
  double output_dt = 0.05;
};

struct SweepRow {
  double eps = 0.0;
  double abscissa = 0.0;
  bool stable = false;
  double hinf = 0.0;
  double tail_max = 0.0;
  double tail_rms = 0.0;
  double gamma_hat = 0.0;
};

std::vector<SweepRow> epsilon_sweep(const NetworkDesign& design, const std::vector<double>& eps_list,
                                    const std::optional<SimSetup>& sim = std::nullopt,
                                    double hinf_tol = 1e-6);

}  // namespace synctool::netsim
