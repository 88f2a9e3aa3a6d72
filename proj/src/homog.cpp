#include "synctool/homog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "synctool/errors.hpp"
#include "synctool/numlin.hpp"

namespace synctool::homog {

namespace {

Error unsupported(const std::string& code, const std::string& what) {
  return Error(ErrorKind::kUnsupported, code, what);
}

Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

double target_slack(const Matrix& ad) { return 1e-6 * std::max(1.0, ad.norm()); }

}  // namespace

TargetModel::TargetModel(int p, int n_q, Matrix gamma) : p_(p), n_q_(n_q), gamma_(std::move(gamma)) {
  if (p < 1 || n_q < 1) throw contract_error("target needs p >= 1 and n_q >= 1");
  if (gamma_.rows() != p || gamma_.cols() != p * n_q) {
    std::ostringstream os;
    os << "Gamma must be " << p << " x " << p * n_q << ", got " << gamma_.rows() << " x "
       << gamma_.cols();
    throw dimension_error(os.str());
  }
  if (!gamma_.allFinite()) throw contract_error("Gamma must be finite");
}

Matrix TargetModel::a_bar() const {
  Matrix a = Matrix::Zero(order(), order());
  for (int j = 0; j + 1 < n_q_; ++j) a.block(j * p_, (j + 1) * p_, p_, p_) = identity(p_);
  return a;
}

Matrix TargetModel::b_bar() const {
  Matrix b = Matrix::Zero(order(), p_);
  b.bottomRows(p_) = identity(p_);
  return b;
}

Matrix TargetModel::c_bar() const {
  Matrix c = Matrix::Zero(p_, order());
  c.leftCols(p_) = identity(p_);
  return c;
}

Matrix TargetModel::a_d() const { return a_bar() + b_bar() * gamma_; }

Matrix TargetModel::a1() const {
  const int r = order() - p_;
  return a_bar().bottomRightCorner(r, r);
}

Matrix TargetModel::b1() const { return b_bar().bottomRows(order() - p_); }

Matrix TargetModel::c1() const { return a_bar().topRightCorner(p_, order() - p_); }

Matrix TargetModel::gamma1() const { return gamma_.leftCols(p_); }

Matrix TargetModel::gamma2() const { return gamma_.rightCols(order() - p_); }

TargetModel build_target(int p, int n_q, const Matrix& gamma) {
  TargetModel t(p, n_q, gamma);
  const Matrix ad = t.a_d();
  const double abscissa = numlin::spectral_abscissa(ad);
  if (abscissa > target_slack(ad)) {
    std::ostringstream os;
    os << "Abar + Bbar Gamma has an eigenvalue with real part " << abscissa;
    throw Error(ErrorKind::kContract, "TARGET_INVALID", os.str());
  }
  return t;
}

void Exosystem::validate() const {
  if (Ar.rows() != Ar.cols() || Ar.rows() < 1) throw dimension_error("exosystem Ar must be square");
  if (Cr.cols() != Ar.rows()) throw dimension_error("exosystem Cr columns differ from Ar size");
  if (x0.size() != Ar.rows()) throw dimension_error("exosystem x0 length differs from Ar size");
  if (!lti::is_observable(Cr, Ar)) {
    throw Error(ErrorKind::kContract, "EXOSYSTEM_INVALID", "(Cr, Ar) is not observable");
  }
  if (numlin::spectral_abscissa(Ar) > target_slack(Ar)) {
    throw Error(ErrorKind::kContract, "EXOSYSTEM_INVALID", "Ar has an eigenvalue in the open right half plane");
  }
}

std::vector<double> minimal_polynomial(const Matrix& c, const Matrix& a) {
  // q(A) = 0 iff C q(A) = 0 when (C, A) is observable, so the Krylov sequence
  // of vec(C A^k) reveals the minimal polynomial.
  const auto r = a.rows();
  const auto len = c.size();
  Matrix krylov(len, r + 1);
  Matrix ck = c;
  for (Eigen::Index k = 0; k <= r; ++k) {
    krylov.col(k) = Eigen::Map<const Vector>(ck.data(), len);
    ck = ck * a;
  }
  for (Eigen::Index d = 1; d <= r; ++d) {
    if (numlin::numeric_rank(Matrix(krylov.leftCols(d + 1)), "minimal polynomial") > d) continue;
    const Vector coef = krylov.leftCols(d).colPivHouseholderQr().solve(krylov.col(d));
    std::vector<double> out(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) out[static_cast<std::size_t>(k)] = -coef[k];
    return out;
  }
  throw Error(ErrorKind::kNumerical, "NO_SOLUTION", "minimal polynomial search did not terminate");
}

TargetModel remodel_exosystem(const Exosystem& exo, int n_q0) {
  exo.validate();
  if (n_q0 < 1) throw contract_error("n_q0 must be at least 1");
  const auto mu = minimal_polynomial(exo.Cr, exo.Ar);
  const int d = static_cast<int>(mu.size());
  const int p = static_cast<int>(exo.Cr.rows());
  const int n_q = std::max(n_q0, d);
  Matrix gamma = Matrix::Zero(p, p * n_q);
  for (int k = 0; k < d; ++k) {
    gamma.block(0, (k + n_q - d) * p, p, p) = -mu[static_cast<std::size_t>(k)] * identity(p);
  }
  return build_target(p, n_q, gamma);
}

TargetModel remodel_exosystem(const Exosystem& exo, const std::vector<lti::AgentModel>& agents) {
  return remodel_exosystem(exo, lti::n_q0(agents));
}

std::optional<Matrix> exosystem_embedding(const TargetModel& target, const Exosystem& exo) {
  if (exo.Cr.rows() != target.p()) return std::nullopt;
  const int p = target.p();
  Matrix mr(target.order(), exo.Ar.rows());
  Matrix block = exo.Cr;
  for (int j = 0; j < target.n_q(); ++j) {
    mr.middleRows(j * p, p) = block;
    block = block * exo.Ar;
  }
  const Matrix ad = target.a_d();
  const double residual = (ad * mr - mr * exo.Ar).norm();
  const double scale = std::max(1.0, mr.norm() * (ad.norm() + exo.Ar.norm()));
  if (residual > 1e-9 * scale) return std::nullopt;
  return mr;
}

Cascade compose(const lti::AgentModel& agent, const Precompensator& pre) {
  const auto n = agent.states();
  const auto np = pre.states();
  const auto m = agent.inputs();
  const auto q = agent.measurements();
  const auto p = pre.H1.cols();
  auto check = [](const Matrix& x, Eigen::Index r, Eigen::Index c, const char* name) {
    if (x.rows() != r || x.cols() != c) {
      std::ostringstream os;
      os << "precompensator " << name << " must be " << r << " x " << c << ", got " << x.rows()
         << " x " << x.cols();
      throw dimension_error(os.str());
    }
  };
  check(pre.G, np, np, "G");
  check(pre.H1, np, p, "H1");
  check(pre.H2, np, q, "H2");
  check(pre.Q, m, np, "Q");
  check(pre.R1, m, p, "R1");
  check(pre.R2, m, q, "R2");
  const Matrix& a = agent.dyn.A;
  const Matrix& b = agent.dyn.B;
  Matrix ac(n + np, n + np);
  ac << a + b * pre.R2 * agent.Cm, b * pre.Q, pre.H2 * agent.Cm, pre.G;
  Matrix bc(n + np, p);
  bc << b * pre.R1, pre.H1;
  Matrix cc(agent.outputs(), n + np);
  cc << agent.dyn.C, Matrix::Zero(agent.outputs(), np);
  Matrix ec(n + np, agent.disturbances());
  ec << agent.E, Matrix::Zero(np, agent.disturbances());
  return Cascade{StateSpace(ac, bc, cc), ec};
}

HomogReport verify_homogenization(const CompensatedAgent& comp, const TargetModel& target, double tol) {
  HomogReport report;
  if (comp.dyn.inputs() != target.p() || comp.dyn.outputs() != target.p()) {
    report.max_deviation = std::numeric_limits<double>::infinity();
    report.first_deviation_index = 0;
    return report;
  }
  const int terms = 2 * static_cast<int>(comp.dyn.states()) + 2;
  const auto got = lti::markov_params(comp.dyn, terms);
  const auto want = lti::markov_params(target.system(), terms);
  for (int k = 0; k < terms; ++k) {
    const auto& w = want[static_cast<std::size_t>(k)];
    const double dev = (got[static_cast<std::size_t>(k)] - w).cwiseAbs().maxCoeff() /
                       std::max(1.0, w.cwiseAbs().maxCoeff());
    if (!(dev <= tol) && report.first_deviation_index < 0) report.first_deviation_index = k;
    if (!(dev <= report.max_deviation)) report.max_deviation = dev;
  }
  const auto& s = comp.internal_stable_part.A;
  report.internal_hurwitz = s.rows() == 0 || numlin::is_hurwitz(s);
  report.passed = report.max_deviation <= tol && report.internal_hurwitz;
  return report;
}

namespace {

// Largest subspace V in ker C with A V in V + im B (orthonormal columns).
Matrix output_nulling_subspace(const Matrix& a, const Matrix& b, const Matrix& c) {
  const auto n = a.rows();
  Matrix v = numlin::null_space(c, "output-nulling subspace");
  for (Eigen::Index it = 0; it <= n && v.cols() > 0; ++it) {
    Matrix vb(n, v.cols() + b.cols());
    vb << v, b;
    const Matrix w = numlin::orth(vb, "output-nulling subspace");
    const Matrix perp = identity(n) - w * w.transpose();
    Matrix stacked(c.rows() + n, n);
    stacked << c, perp * a;
    Matrix next = numlin::null_space(stacked, "output-nulling subspace");
    if (next.cols() == v.cols()) return next;
    v = std::move(next);
  }
  return v;
}

std::vector<numlin::Complex> spaced_poles(Eigen::Index count) {
  std::vector<numlin::Complex> out;
  for (Eigen::Index k = 1; k <= count; ++k) out.emplace_back(-static_cast<double>(k), 0.0);
  return out;
}

// Pre-feedback F that makes the largest output-nulling subspace invariant
// and stabilizes the motion inside it through inputs that only act there.
Matrix zero_dynamics_feedback(const Matrix& a, const Matrix& b, const Matrix& c) {
  const auto n = a.rows();
  const auto m = b.cols();
  const Matrix v = output_nulling_subspace(a, b, c);
  const auto d = v.cols();
  if (d == 0) return Matrix::Zero(m, n);

  Matrix lhs(n, d + m);
  lhs << v, -b;
  const Matrix rhs = a * v;
  const Matrix sol = lhs.colPivHouseholderQr().solve(rhs);
  if ((lhs * sol - rhs).norm() > 1e-9 * std::max(1.0, rhs.norm())) {
    throw Error(ErrorKind::kSynthesis, "SYNTHESIS_BUG", "output-nulling subspace is not controlled invariant");
  }
  const Matrix f0 = sol.bottomRows(m) * v.transpose();
  const Matrix n_free = numlin::null_space((identity(n) - v * v.transpose()) * b, "zero-dynamics inputs");

  const Matrix av = v.transpose() * (a + b * f0) * v;
  const Matrix bv = v.transpose() * b * n_free;
  const Matrix vc = numlin::controllable_subspace(av, bv);
  if (vc.cols() < d) {
    const Matrix vu = numlin::null_space(vc.transpose(), "zero-dynamics split");
    const Matrix auu = vu.transpose() * av * vu;
    if (!numlin::is_hurwitz(auu)) {
      std::ostringstream os;
      os << "zero dynamics have a mode with real part " << numlin::spectral_abscissa(auu)
         << " that no input can move";
      throw unsupported("NON_MINIMUM_PHASE", os.str());
    }
  }
  Matrix f = f0;
  if (vc.cols() > 0) {
    const Matrix acc = vc.transpose() * av * vc;
    const Matrix bc = vc.transpose() * bv;
    const Matrix k = numlin::place_poles(acc, bc, spaced_poles(vc.cols()));
    f -= n_free * k * vc.transpose() * v.transpose();
  }
  return f;
}

// Candidate input-mixing matrices S (m x p): unit columns first, then
// pairwise sums, in lexicographic order of the chosen columns.
std::vector<Matrix> mixing_candidates(Eigen::Index m, Eigen::Index p) {
  if (m == p) return {identity(m)};
  std::vector<Vector> pool;
  for (Eigen::Index i = 0; i < m; ++i) pool.push_back(Vector::Unit(m, i));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) pool.push_back(Vector::Unit(m, i) + Vector::Unit(m, j));
  std::vector<Matrix> out;
  const std::size_t limit = 4096;
  std::vector<std::size_t> idx(static_cast<std::size_t>(p));
  // Recursive enumeration of increasing index tuples.
  auto rec = [&](auto&& self, std::size_t pos, std::size_t start) -> void {
    if (out.size() >= limit) return;
    if (pos == idx.size()) {
      Matrix s(m, p);
      for (std::size_t k = 0; k < idx.size(); ++k) s.col(static_cast<Eigen::Index>(k)) = pool[idx[k]];
      out.push_back(std::move(s));
      return;
    }
    for (std::size_t i = start; i < pool.size(); ++i) {
      idx[pos] = i;
      self(self, pos + 1, i + 1);
    }
  };
  rec(rec, 0, 0);
  return out;
}

struct Attempt {
  std::optional<Design> design;
  std::string why;
};

Attempt try_mixing(const lti::AgentModel& agent, const TargetModel& target, const Matrix& f,
                   const Matrix& s, const Matrix& cm_pinv) {
  const Matrix& a = agent.dyn.A;
  const Matrix& b = agent.dyn.B;
  const Matrix& c = agent.dyn.C;
  const auto n = agent.states();
  const int p = target.p();
  const int nq = target.n_q();
  const Matrix af = a + b * f;
  const Matrix bs = b * s;
  const Matrix& gamma = target.gamma();

  // Relative degree of each output row in the loop closed by F.
  std::vector<int> r(static_cast<std::size_t>(p), 0);
  std::vector<Matrix> rows;  // rows[k] holds C_k A_F^j for j = 0..nq
  for (int k = 0; k < p; ++k) {
    Matrix powers(nq + 1, n);
    Eigen::RowVectorXd row = c.row(k);
    for (int j = 0; j <= nq; ++j) {
      powers.row(j) = row;
      row = row * af;
    }
    for (int j = 1; j <= nq && r[static_cast<std::size_t>(k)] == 0; ++j) {
      const Eigen::RowVectorXd g = powers.row(j - 1) * bs;
      if (g.norm() > 1e-9 * std::max(1.0, powers.row(j - 1).norm() * bs.norm())) {
        r[static_cast<std::size_t>(k)] = j;
      }
    }
    if (r[static_cast<std::size_t>(k)] == 0) return {std::nullopt, "relative degree exceeds n_q"};
    rows.push_back(std::move(powers));
  }

  Matrix dec(p, p), phi(p, n);
  for (int k = 0; k < p; ++k) {
    const int rk = r[static_cast<std::size_t>(k)];
    dec.row(k) = rows[static_cast<std::size_t>(k)].row(rk - 1) * bs;
    phi.row(k) = rows[static_cast<std::size_t>(k)].row(rk);
  }
  Eigen::JacobiSVD<Matrix> svd(dec);
  const auto sv = svd.singularValues();
  if (sv(p - 1) <= 1e-8 * sv(0)) return {std::nullopt, "decoupling matrix is singular"};
  const Matrix dec_inv = dec.inverse();

  // Integrator chains raise each relative degree to n_q.
  std::vector<int> offset(static_cast<std::size_t>(p), 0);
  int np = 0;
  for (int k = 0; k < p; ++k) {
    offset[static_cast<std::size_t>(k)] = np;
    np += nq - r[static_cast<std::size_t>(k)];
  }
  Matrix mx = Matrix::Zero(p * nq, n);
  Matrix mp = Matrix::Zero(p * nq, np);
  for (int j = 1; j <= nq; ++j) {
    for (int k = 0; k < p; ++k) {
      const int rk = r[static_cast<std::size_t>(k)];
      const int row = (j - 1) * p + k;
      if (j <= rk) {
        mx.row(row) = rows[static_cast<std::size_t>(k)].row(j - 1);
      } else {
        mp(row, offset[static_cast<std::size_t>(k)] + (j - rk - 1)) = 1.0;
      }
    }
  }
  Matrix shift = Matrix::Zero(np, np);
  Matrix e_last = Matrix::Zero(np, p);
  Matrix p_first = Matrix::Zero(p, np);
  Matrix jsel = Matrix::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    const int len = nq - r[static_cast<std::size_t>(k)];
    const int off = offset[static_cast<std::size_t>(k)];
    if (len == 0) {
      jsel(k, k) = 1.0;
      continue;
    }
    for (int i = 0; i + 1 < len; ++i) shift(off + i, off + i + 1) = 1.0;
    e_last(off + len - 1, k) = 1.0;
    p_first(k, off) = 1.0;
  }

  Precompensator pre;
  pre.G = shift + e_last * gamma * mp;
  pre.H1 = e_last;
  pre.H2 = e_last * gamma * mx * cm_pinv;
  pre.Q = s * dec_inv * (p_first + jsel * gamma * mp);
  pre.R1 = s * dec_inv * jsel;
  pre.R2 = (f + s * dec_inv * (-phi + jsel * gamma * mx)) * cm_pinv;

  const Cascade cas = compose(agent, pre);
  Matrix m_tgt(p * nq, n + np);
  m_tgt << mx, mp;
  const Matrix ad = target.a_d();
  const Matrix& acas = cas.dyn.A;
  const double scale = std::max(1.0, acas.norm() * m_tgt.norm());
  const double res = (m_tgt * acas - ad * m_tgt).norm() + (m_tgt * cas.dyn.B - target.b_bar()).norm() +
                     (cas.dyn.C - target.c_bar() * m_tgt).norm();
  if (res > 1e-8 * scale) return {std::nullopt, "target coordinates do not intertwine"};
  if (numlin::numeric_rank(m_tgt, "target coordinates") < p * nq) {
    return {std::nullopt, "target coordinates are rank deficient"};
  }

  const Matrix u = numlin::null_space(m_tgt, "residual dynamics");
  const auto dres = u.cols();
  const Matrix s_res = u.transpose() * acas * u;
  if (dres > 0 && !numlin::is_hurwitz(s_res)) {
    return {std::nullopt, "residual dynamics are not Hurwitz"};
  }
  Matrix phi_t(n + np, n + np);
  phi_t << m_tgt, u.transpose();
  const Matrix phi_inv = phi_t.inverse();
  const Matrix a_theta_x = u.transpose() * acas * phi_inv.leftCols(p * nq);
  Matrix lift = Matrix::Zero(n + np, p * nq);
  lift.topRows(p * nq) = identity(p * nq);
  if (dres > 0) {
    lift.bottomRows(dres) = numlin::sylvester_solve(s_res, -ad, -a_theta_x);
  }

  CompensatedAgent comp;
  comp.dyn = cas.dyn;
  comp.E = cas.E;
  comp.plant_states = n;
  comp.to_target = m_tgt;
  comp.embedding = phi_inv * lift;
  comp.Ebar = m_tgt * cas.E;
  Matrix in(dres, p * nq + agent.disturbances());
  in << a_theta_x, u.transpose() * cas.E;
  comp.internal_stable_part = StateSpace(s_res, in, Matrix::Zero(p * nq, dres));
  return {Design{std::move(pre), std::move(comp)}, ""};
}

}  // namespace

Design design_precompensator(const lti::AgentModel& agent, const TargetModel& target) {
  agent.validate();
  if (agent.outputs() != target.p()) {
    std::ostringstream os;
    os << "agent has " << agent.outputs() << " outputs but the target has p = " << target.p();
    throw dimension_error(os.str());
  }
  const auto rep = lti::structural_analysis(agent);
  if (!rep.stabilizable || !rep.detectable) {
    throw Error(ErrorKind::kContract, "ASSUMPTION_VIOLATED", "agent must be stabilizable and detectable");
  }
  if (!rep.right_invertible) throw unsupported("NOT_RIGHT_INVERTIBLE", "agent is not right-invertible");
  if (rep.n_q0_contribution > target.n_q()) {
    std::ostringstream os;
    os << "agent has an infinite zero of order " << rep.n_q0_contribution << " above n_q = " << target.n_q();
    throw Error(ErrorKind::kContract, "TARGET_RANK_TOO_LOW", os.str());
  }
  const auto n = agent.states();
  if (numlin::numeric_rank(agent.Cm, "measurement rank") < n) {
    throw unsupported("PARTIAL_MEASUREMENT", "construction needs Cm of full column rank (full state measurement)");
  }
  const Matrix cm_pinv = agent.Cm.completeOrthogonalDecomposition().pseudoInverse();
  const Matrix f = zero_dynamics_feedback(agent.dyn.A, agent.dyn.B, agent.dyn.C);

  std::string last_reason = "no candidate input mixing";
  for (const Matrix& s : mixing_candidates(agent.inputs(), target.p())) {
    Attempt att = try_mixing(agent, target, f, s, cm_pinv);
    if (!att.design) {
      last_reason = att.why;
      continue;
    }
    const auto report = verify_homogenization(att.design->comp, target);
    if (!report.passed) {
      std::ostringstream os;
      os << "Markov deviation " << report.max_deviation << " after synthesis";
      throw Error(ErrorKind::kSynthesis, "SYNTHESIS_BUG", os.str());
    }
    return std::move(*att.design);
  }
  throw unsupported("NO_SQUARING_DOWN", "no input mixing gives a valid construction: " + last_reason);
}

}  // namespace synctool::homog
