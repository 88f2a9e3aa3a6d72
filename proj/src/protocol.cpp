#include "synctool/protocol.hpp"

#include <cmath>
#include <sstream>

#include "synctool/errors.hpp"

namespace synctool::protocol {

namespace {

using numlin::Complex;

std::vector<Complex> default_poles(int count) {
  std::vector<Complex> out;
  for (int k = 0; k < count; ++k) out.emplace_back(-2.0 - k, 0.0);
  return out;
}

void require_stable_poles(const std::vector<Complex>& poles, const char* what) {
  if (!numlin::is_conjugate_closed(poles)) {
    throw contract_error(std::string(what) + " poles must be closed under conjugation");
  }
  for (const auto& s : poles) {
    if (!(s.real() < 0.0)) throw contract_error(std::string(what) + " poles must be strictly stable");
  }
}

// Per-channel chain gain [c0 I, c1 I, ...] from n_q poles, or a full
// placement on (Abar, Bbar) from p n_q poles.
Matrix chain_gain(const homog::TargetModel& t, const std::vector<Complex>& poles) {
  const int p = t.p();
  const int nq = t.n_q();
  require_stable_poles(poles, "F");
  if (static_cast<int>(poles.size()) == nq) {
    const auto c = numlin::poly_from_roots(poles);
    Matrix f = Matrix::Zero(p, p * nq);
    for (int k = 0; k < nq; ++k) f.block(0, k * p, p, p) = c[static_cast<std::size_t>(k)] * Matrix::Identity(p, p);
    return f;
  }
  if (static_cast<int>(poles.size()) == p * nq) return numlin::place_poles(t.a_bar(), t.b_bar(), poles);
  std::ostringstream os;
  os << "F needs " << nq << " or " << p * nq << " poles, got " << poles.size();
  throw contract_error(os.str());
}

Matrix observer_gain(const homog::TargetModel& t, const std::vector<Complex>& poles) {
  const int p = t.p();
  const int r = t.order() - p;
  require_stable_poles(poles, "K2");
  const Matrix a = t.a1() + t.b1() * t.gamma2();
  if (static_cast<int>(poles.size()) == t.n_q() - 1 && p > 1) {
    // Same poles on every channel, as p copies of the single-channel design.
    std::vector<Complex> all;
    for (int c = 0; c < p; ++c) all.insert(all.end(), poles.begin(), poles.end());
    return numlin::place_poles(a.transpose(), t.c1().transpose(), all).transpose();
  }
  if (static_cast<int>(poles.size()) != r) {
    std::ostringstream os;
    os << "K2 needs " << r << " poles, got " << poles.size();
    throw contract_error(os.str());
  }
  return numlin::place_poles(a.transpose(), t.c1().transpose(), poles).transpose();
}

Matrix observer_matrix(const homog::TargetModel& t, const Matrix& k2) {
  return t.a1() + t.b1() * t.gamma2() - k2 * t.c1();
}

}  // namespace

Matrix ProtocolParams::K() const {
  Matrix k(target.order(), target.p());
  k << K1, K2 * K1;
  return k;
}

void ProtocolParams::validate() const {
  const int p = target.p();
  const int nq = target.n_q();
  if (F.rows() != p || F.cols() != p * nq) throw dimension_error("F must be p x p n_q");
  if (K1.rows() != p || K1.cols() != p) throw dimension_error("K1 must be p x p");
  if (K2.rows() != p * (nq - 1) || K2.cols() != p) throw dimension_error("K2 must be p(n_q - 1) x p");
  if (!numlin::is_hurwitz(target.a_bar() - target.b_bar() * F)) {
    throw Error(ErrorKind::kContract, "GAIN_INVALID", "Abar - Bbar F is not Hurwitz");
  }
  if (nq > 1 && !numlin::is_hurwitz(observer_matrix(target, K2))) {
    throw Error(ErrorKind::kContract, "GAIN_INVALID", "Abar1 + Bbar1 Gamma2 - K2 Cbar1 is not Hurwitz");
  }
  if ((K1 - K1.transpose()).norm() > 1e-12 * std::max(1.0, K1.norm())) {
    throw Error(ErrorKind::kContract, "GAIN_INVALID", "K1 must be symmetric");
  }
}

Matrix compute_psi(const homog::TargetModel& t, const Matrix& k2) {
  return t.a1() * k2 - k2 * t.c1() * k2 + t.b1() * t.gamma1() + t.b1() * t.gamma2() * k2;
}

double compute_alpha(const homog::TargetModel& t, const Matrix& k2, const Matrix& p) {
  auto norm2 = [](const Matrix& m) { return m.size() == 0 ? 0.0 : numlin::sigma_max(m); };
  const Matrix psi = compute_psi(t, k2);
  const double ppsi = norm2(p * psi);
  const double c1 = norm2(t.c1());
  return 1.0 + 2.0 * norm2(t.c1() * k2) + ppsi * ppsi + c1 * c1;
}

ProtocolParams design_gains(const homog::TargetModel& target, const GainSpec& spec) {
  const int p = target.p();
  const int nq = target.n_q();
  ProtocolParams out;
  out.target = target;
  out.F = spec.F ? *spec.F : chain_gain(target, spec.F_poles.empty() ? default_poles(nq) : spec.F_poles);
  if (nq == 1) {
    out.K2 = Matrix(0, p);
  } else if (spec.K2) {
    out.K2 = *spec.K2;
  } else {
    out.K2 = observer_gain(target, spec.K2_poles.empty() ? default_poles(nq - 1) : spec.K2_poles);
  }
  if (out.F.rows() != p || out.F.cols() != p * nq) throw dimension_error("F must be p x p n_q");
  if (out.K2.rows() != p * (nq - 1) || out.K2.cols() != p) throw dimension_error("K2 must be p(n_q - 1) x p");

  const int r = p * (nq - 1);
  if (r > 0) {
    const Matrix ak = observer_matrix(target, out.K2);
    if (!numlin::is_hurwitz(ak)) {
      throw Error(ErrorKind::kContract, "GAIN_INVALID", "Abar1 + Bbar1 Gamma2 - K2 Cbar1 is not Hurwitz");
    }
    // P ak + ak^T P = -3 I.
    out.P = numlin::lyap_solve(ak, 3.0 * Matrix::Identity(r, r));
  } else {
    out.P = Matrix(0, 0);
  }
  out.Psi = compute_psi(target, out.K2);
  out.alpha = compute_alpha(target, out.K2, out.P);

  if (spec.K1) {
    out.K1 = *spec.K1;
    if (out.K1.rows() != p || out.K1.cols() != p) throw dimension_error("K1 must be p x p");
    const Matrix sym = 0.5 * (out.K1 + out.K1.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym - 0.5 * out.alpha * Matrix::Identity(p, p));
    if (!(es.eigenvalues().minCoeff() > 0.0)) {
      std::ostringstream os;
      os << "K1 does not exceed alpha/2 = " << 0.5 * out.alpha << "; the stability certificate does not apply";
      out.warnings.push_back(os.str());
    }
  } else {
    if (!(spec.alpha_margin > 0.0)) throw contract_error("alpha_margin must be positive");
    out.K1 = (0.5 * out.alpha + spec.alpha_margin) * Matrix::Identity(p, p);
  }
  out.validate();
  return out;
}

ProtocolParams design_gains(const homog::TargetModel& target, const std::vector<Complex>& F_poles,
                            const std::vector<Complex>& K2_poles, double alpha_margin) {
  GainSpec spec;
  spec.F_poles = F_poles;
  spec.K2_poles = K2_poles;
  spec.alpha_margin = alpha_margin;
  return design_gains(target, spec);
}

Matrix build_delta(int p, int n_q, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    std::ostringstream os;
    os << "eps must lie in (0, 1], got " << eps;
    throw contract_error(os.str());
  }
  Matrix d = Matrix::Zero(p * n_q, p * n_q);
  for (int j = 0; j < n_q; ++j) d.block(j * p, j * p, p, p).diagonal().setConstant(std::pow(eps, j));
  return d;
}

Matrix build_delta(const ProtocolParams& params, double eps) {
  return build_delta(params.target.p(), params.target.n_q(), eps);
}

Matrix delta_bar(const ProtocolParams& params, double eps) {
  build_delta(params, eps);  // range check
  const int p = params.target.p();
  const int r = params.target.order() - p;
  Matrix d = Matrix::Zero(p + r, p + r);
  d.topLeftCorner(p, p).setIdentity();
  d.bottomLeftCorner(r, p) = -eps * params.K2;
  d.bottomRightCorner(r, r) = eps * Matrix::Identity(r, r);
  return d;
}

Matrix observer_error_matrix(const ProtocolParams& params, double eps) {
  build_delta(params, eps);
  const auto& t = params.target;
  const int p = t.p();
  const int r = t.order() - p;
  Matrix a(p + r, p + r);
  a.topLeftCorner(p, p) = -params.K1 / eps + t.c1() * params.K2;
  a.topRightCorner(p, r) = t.c1() / eps;
  a.bottomLeftCorner(r, p) = eps * params.Psi;
  a.bottomRightCorner(r, r) = observer_matrix(t, params.K2);
  return a;
}

ProtocolBlock assemble_protocol_block(const ProtocolParams& params, double eps, SyncMode mode, bool iota) {
  const Matrix delta = build_delta(params, eps);
  const auto& t = params.target;
  const int p = t.p();
  const int n = t.order();
  const double inv = 1.0 / eps;
  const Matrix readout = -std::pow(inv, t.n_q()) * params.F * delta;  // v = readout * chi
  const Matrix ad = t.a_d();
  const Matrix bbar = t.b_bar();
  const Matrix k = params.K();
  const bool with_iota = mode == SyncMode::kRegulated && iota;
  const Matrix eye = Matrix::Identity(n, n);

  Matrix a(2 * n, 2 * n);
  a.topLeftCorner(n, n) = ad - inv * k * t.c_bar();
  a.topRightCorner(n, n) = with_iota ? Matrix(bbar * readout) : Matrix::Zero(n, n);
  a.bottomLeftCorner(n, n) = inv * eye;
  a.bottomRightCorner(n, n) = ad + bbar * readout - (with_iota ? inv : 0.0) * eye;

  Matrix b = Matrix::Zero(2 * n, p + n);
  b.topLeftCorner(n, p) = inv * k;
  b.topRightCorner(n, n) = bbar * readout;
  b.bottomRightCorner(n, n) = -inv * eye;

  Matrix c = Matrix::Zero(p + n, 2 * n);
  c.topRightCorner(p, n) = readout;
  c.bottomRightCorner(n, n) = eye;

  return ProtocolBlock{StateSpace(a, b, c), mode, iota, eps};
}

}  // namespace synctool::protocol
