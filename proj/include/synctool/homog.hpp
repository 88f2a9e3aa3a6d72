#pragma once

// Target models and the pre-compensators that make each agent, seen from its
// new input v to its output y, behave like the common target chain
//   xbar' = (Abar + Bbar Gamma) xbar + Bbar v,  y = Cbar xbar
// up to an exponentially stable remainder.

#include <optional>
#include <vector>

#include "synctool/lti.hpp"
#include "synctool/state_space.hpp"

namespace synctool::homog {

// p parallel chains of n_q integrators closed by Gamma. The state is ordered
// by derivative level: block j (of p rows) holds the (j-1)-th derivatives.
class TargetModel {
 public:
  TargetModel() = default;
  TargetModel(int p, int n_q, Matrix gamma);

  int p() const { return p_; }
  int n_q() const { return n_q_; }
  int order() const { return p_ * n_q_; }
  const Matrix& gamma() const { return gamma_; }

  Matrix a_bar() const;
  Matrix b_bar() const;
  Matrix c_bar() const;
  Matrix a_d() const;  // Abar + Bbar Gamma
  StateSpace system() const { return StateSpace(a_d(), b_bar(), c_bar()); }

  // Partition of the chain into the first block and the remaining n_q - 1.
  Matrix a1() const;
  Matrix b1() const;
  Matrix c1() const;
  Matrix gamma1() const;
  Matrix gamma2() const;

 private:
  int p_ = 0;
  int n_q_ = 0;
  Matrix gamma_;
};

// Validates shapes and that Abar + Bbar Gamma has no open right-half-plane
// eigenvalue (a small relative slack covers rounding on the imaginary axis).
TargetModel build_target(int p, int n_q, const Matrix& gamma);

struct Exosystem {
  Matrix Ar;
  Matrix Cr;
  Vector x0;

  void validate() const;  // observable, no eigenvalue in the open RHP
};

// Target for regulation: n_q = max(n_q0, deg mu) with mu the minimal
// polynomial of Ar, and each channel closed with s^{n_q - deg mu} mu(s).
TargetModel remodel_exosystem(const Exosystem& exo, int n_q0);
TargetModel remodel_exosystem(const Exosystem& exo, const std::vector<lti::AgentModel>& agents);

// Minimal polynomial of A (monic, ascending coefficients without the leading
// 1) when (C, A) is observable.
std::vector<double> minimal_polynomial(const Matrix& c, const Matrix& a);

// Mr with Ad Mr = Mr Ar and Cbar Mr = Cr, when it exists.
std::optional<Matrix> exosystem_embedding(const TargetModel& target, const Exosystem& exo);

// p' = G p + H1 v + H2 z,  u = Q p + R1 v + R2 z.
struct Precompensator {
  Matrix G, H1, H2, Q, R1, R2;
  Eigen::Index states() const { return G.rows(); }
};

// Agent in series with its pre-compensator, state (x, p).
struct Cascade {
  StateSpace dyn;  // input v, output y
  Matrix E;        // disturbance input
};

Cascade compose(const lti::AgentModel& agent, const Precompensator& pre);

struct CompensatedAgent {
  StateSpace dyn;
  Matrix E;
  Eigen::Index plant_states = 0;
  // xbar = to_target * (x, p); to_target * dyn.A = Ad * to_target.
  Matrix to_target;
  // dyn.A * embedding = embedding * Ad and to_target * embedding = I.
  Matrix embedding;
  // Disturbance direction in target coordinates.
  Matrix Ebar;
  // Remainder theta' = S theta + [A_theta_xbar, E_theta] (xbar, w); its
  // output rho enters the target chain and is identically zero here.
  StateSpace internal_stable_part;
};

struct HomogReport {
  double max_deviation = 0.0;
  int first_deviation_index = -1;  // first Markov index above tolerance
  bool internal_hurwitz = false;
  bool passed = false;
};

inline constexpr double kHomogTolerance = 1e-8;

HomogReport verify_homogenization(const CompensatedAgent& comp, const TargetModel& target,
                                  double tol = kHomogTolerance);

struct Design {
  Precompensator pre;
  CompensatedAgent comp;
};

// Full-state construction: requires Cm of full column rank, a right-invertible
// stabilizable and detectable agent, infinite-zero orders at most n_q, and
// stable (or stabilizable through spare inputs) zero dynamics.
Design design_precompensator(const lti::AgentModel& agent, const TargetModel& target);

}  // namespace synctool::homog
