#pragma once

#include <vector>

#include "synctool/state_space.hpp"

namespace synctool::lti {

// One heterogeneous agent: x' = A x + B u + E w, y = C x, z = Cm x.
struct AgentModel {
  StateSpace dyn;  // D is zero
  Matrix E;
  Matrix Cm;

  AgentModel() = default;
  AgentModel(Matrix a, Matrix b, Matrix c, Matrix e, Matrix cm);

  Eigen::Index states() const { return dyn.A.rows(); }
  Eigen::Index inputs() const { return dyn.B.cols(); }
  Eigen::Index outputs() const { return dyn.C.rows(); }
  Eigen::Index disturbances() const { return E.cols(); }
  Eigen::Index measurements() const { return Cm.rows(); }

  void validate() const;
};

struct StructuralReport {
  bool stabilizable = false;
  bool detectable = false;
  bool right_invertible = false;
  std::vector<int> infinite_zero_orders;
  int n_q0_contribution = 0;  // max of infinite_zero_orders (0 if none)
};

// g2 after g1: u -> g1 -> g2 -> y.
StateSpace series(const StateSpace& g1, const StateSpace& g2);

// Block-diagonal stacking: inputs and outputs are concatenated.
StateSpace append(const StateSpace& g1, const StateSpace& g2);

// Negative feedback u = r - h(y) around g; requires I + Dg Dh invertible.
StateSpace feedback(const StateSpace& g, const StateSpace& h);

// [D, CB, CAB, ..., C A^{k-2} B]; k >= 1 terms.
std::vector<Matrix> markov_params(const StateSpace& sys, int k);

bool is_stabilizable(const Matrix& a, const Matrix& b);
bool is_detectable(const Matrix& c, const Matrix& a);
bool is_observable(const Matrix& c, const Matrix& a);

// Infinite-zero orders from the rank increments of the block Toeplitz
// matrices of Markov parameters (D included as the order-0 term).
StructuralReport analyze_structure(const StateSpace& sys);
StructuralReport structural_analysis(const AgentModel& m);

// Upper bound on infinite-zero orders over the agent set, floored at 1.
int n_q0(const std::vector<AgentModel>& agents);
int n_q0(const std::vector<StructuralReport>& reports);

}  // namespace synctool::lti
