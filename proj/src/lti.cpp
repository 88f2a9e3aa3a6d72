#include "synctool/lti.hpp"

#include <algorithm>
#include <sstream>

#include "synctool/errors.hpp"
#include "synctool/numlin.hpp"

namespace synctool::lti {

AgentModel::AgentModel(Matrix a, Matrix b, Matrix c, Matrix e, Matrix cm)
    : dyn(std::move(a), std::move(b), std::move(c)), E(std::move(e)), Cm(std::move(cm)) {
  validate();
}

void AgentModel::validate() const {
  dyn.validate();
  if (!dyn.D.isZero(0.0)) throw contract_error("agent models have no feedthrough (D = 0)");
  if (E.rows() != states()) {
    std::ostringstream os;
    os << "E must have " << states() << " rows, got " << E.rows();
    throw dimension_error(os.str());
  }
  if (Cm.cols() != states()) {
    std::ostringstream os;
    os << "Cm must have " << states() << " columns, got " << Cm.cols();
    throw dimension_error(os.str());
  }
  if (!dyn.A.allFinite() || !dyn.B.allFinite() || !dyn.C.allFinite() || !E.allFinite() ||
      !Cm.allFinite()) {
    throw contract_error("agent matrices must be finite");
  }
}

StateSpace series(const StateSpace& g1, const StateSpace& g2) {
  g1.validate();
  g2.validate();
  if (g1.outputs() != g2.inputs()) {
    std::ostringstream os;
    os << "series: first system has " << g1.outputs() << " outputs, second expects "
       << g2.inputs() << " inputs";
    throw dimension_error(os.str());
  }
  const auto n1 = g1.states();
  const auto n2 = g2.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = g1.A;
  a.bottomLeftCorner(n2, n1) = g2.B * g1.C;
  a.bottomRightCorner(n2, n2) = g2.A;
  Matrix b(n1 + n2, g1.inputs());
  b << g1.B, g2.B * g1.D;
  Matrix c(g2.outputs(), n1 + n2);
  c << g2.D * g1.C, g2.C;
  return StateSpace(a, b, c, g2.D * g1.D);
}

StateSpace append(const StateSpace& g1, const StateSpace& g2) {
  g1.validate();
  g2.validate();
  const auto n1 = g1.states(), n2 = g2.states();
  const auto m1 = g1.inputs(), m2 = g2.inputs();
  const auto p1 = g1.outputs(), p2 = g2.outputs();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = g1.A;
  a.bottomRightCorner(n2, n2) = g2.A;
  Matrix b = Matrix::Zero(n1 + n2, m1 + m2);
  b.topLeftCorner(n1, m1) = g1.B;
  b.bottomRightCorner(n2, m2) = g2.B;
  Matrix c = Matrix::Zero(p1 + p2, n1 + n2);
  c.topLeftCorner(p1, n1) = g1.C;
  c.bottomRightCorner(p2, n2) = g2.C;
  Matrix d = Matrix::Zero(p1 + p2, m1 + m2);
  d.topLeftCorner(p1, m1) = g1.D;
  d.bottomRightCorner(p2, m2) = g2.D;
  return StateSpace(a, b, c, d);
}

StateSpace feedback(const StateSpace& g, const StateSpace& h) {
  g.validate();
  h.validate();
  if (h.inputs() != g.outputs() || h.outputs() != g.inputs()) {
    throw dimension_error("feedback: loop dimensions do not close");
  }
  const auto m = g.inputs();
  const auto p = g.outputs();
  const Matrix e = Matrix::Identity(m, m) + h.D * g.D;
  const auto lu = e.fullPivLu();
  if (!lu.isInvertible()) throw contract_error("feedback loop is not well posed");
  const Matrix e_inv = lu.inverse();
  // u = E^{-1} (r - Dh Cg xg - Ch xh)
  const auto ng = g.states();
  const auto nh = h.states();
  Matrix ku(m, ng + nh);
  ku << -e_inv * h.D * g.C, -e_inv * h.C;
  Matrix a(ng + nh, ng + nh);
  a.topRows(ng) << g.A, Matrix::Zero(ng, nh);
  a.bottomRows(nh) << h.B * g.C, h.A;
  Matrix y_of_x(p, ng + nh);
  y_of_x << g.C, Matrix::Zero(p, nh);
  Matrix bu(ng + nh, m);
  bu << g.B, h.B * g.D;
  a += bu * ku;
  const Matrix b = bu * e_inv;
  const Matrix c = y_of_x + g.D * ku;
  const Matrix d = g.D * e_inv;
  return StateSpace(a, b, c, d);
}

std::vector<Matrix> markov_params(const StateSpace& sys, int k) {
  sys.validate();
  if (k < 1) throw contract_error("markov_params needs k >= 1");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(k));
  out.push_back(sys.D);
  Matrix ak_b = sys.B;
  for (int i = 1; i < k; ++i) {
    out.push_back(sys.C * ak_b);
    ak_b = sys.A * ak_b;
  }
  return out;
}

namespace {

// PBH rank test on every eigenvalue that is not strictly stable.
bool pbh_full_rank(const Matrix& a, const Matrix& b, std::string_view test) {
  const auto n = a.rows();
  if (n == 0) return true;
  const numlin::Spectrum eig = numlin::eigenvalues(a);
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig[i].real() < -numlin::kHurwitzTolerance) continue;
    numlin::ComplexMatrix m(n, n + b.cols());
    m.leftCols(n) = -a.cast<numlin::Complex>();
    m.leftCols(n).diagonal().array() += eig[i];
    m.rightCols(b.cols()) = b.cast<numlin::Complex>();
    if (numlin::numeric_rank(m, test) < n) return false;
  }
  return true;
}

}  // namespace

bool is_stabilizable(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw dimension_error("stabilizability: inconsistent A/B");
  }
  return pbh_full_rank(a, b, "stabilizability");
}

bool is_detectable(const Matrix& c, const Matrix& a) {
  if (a.rows() != a.cols() || c.cols() != a.rows()) {
    throw dimension_error("detectability: inconsistent C/A");
  }
  return pbh_full_rank(a.transpose(), c.transpose(), "detectability");
}

bool is_observable(const Matrix& c, const Matrix& a) {
  if (a.rows() != a.cols() || c.cols() != a.rows()) {
    throw dimension_error("observability: inconsistent C/A");
  }
  const auto n = a.rows();
  if (n == 0) return true;
  Matrix obs(c.rows() * n, n);
  Matrix block = c;
  for (Eigen::Index k = 0; k < n; ++k) {
    obs.middleRows(k * c.rows(), c.rows()) = block;
    block = block * a;
  }
  return numlin::numeric_rank(obs, "observability") == n;
}

StructuralReport analyze_structure(const StateSpace& sys) {
  sys.validate();
  const int n = static_cast<int>(sys.states());
  const auto p = sys.outputs();
  const auto m = sys.inputs();
  const int terms = n + 2;
  const auto markov = markov_params(sys, terms);

  StructuralReport report;
  report.stabilizable = is_stabilizable(sys.A, sys.B);
  report.detectable = is_detectable(sys.C, sys.A);

  // delta_k = rank T_k - rank T_{k-1}; the number of infinite zeros of order
  // exactly j is delta_{j+1} - delta_j.
  std::vector<Eigen::Index> ranks{0};
  for (int k = 1; k <= terms; ++k) {
    Matrix t = Matrix::Zero(k * p, k * m);
    for (int i = 0; i < k; ++i)
      for (int l = 0; l <= i; ++l) t.block(i * p, l * m, p, m) = markov[static_cast<std::size_t>(i - l)];
    ranks.push_back(numlin::numeric_rank(t, "right-invertibility (Toeplitz rank)"));
  }
  std::vector<Eigen::Index> delta(ranks.size(), 0);
  for (std::size_t k = 1; k < ranks.size(); ++k) delta[k] = ranks[k] - ranks[k - 1];
  for (std::size_t j = 0; j + 1 < delta.size(); ++j) {
    const Eigen::Index count = delta[j + 1] - delta[j];
    if (count < 0) {
      throw Error(ErrorKind::kNumerical, "RANK_INDETERMINATE",
                  "Toeplitz rank increments are not monotone");
    }
    for (Eigen::Index c = 0; c < count; ++c) report.infinite_zero_orders.push_back(static_cast<int>(j));
  }
  report.right_invertible = delta.back() == p && p > 0;
  report.n_q0_contribution =
      report.infinite_zero_orders.empty()
          ? 0
          : *std::max_element(report.infinite_zero_orders.begin(), report.infinite_zero_orders.end());
  return report;
}

StructuralReport structural_analysis(const AgentModel& m) {
  m.validate();
  return analyze_structure(m.dyn);
}

int n_q0(const std::vector<StructuralReport>& reports) {
  int best = 1;
  for (const auto& r : reports) best = std::max(best, r.n_q0_contribution);
  return best;
}

int n_q0(const std::vector<AgentModel>& agents) {
  std::vector<StructuralReport> reports;
  for (const auto& a : agents) reports.push_back(structural_analysis(a));
  return n_q0(reports);
}

}  // namespace synctool::lti
