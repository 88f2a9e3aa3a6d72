#include "synctool/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace synctool {

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  validate();
}

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  D = Matrix::Zero(C.rows(), B.cols());
  validate();
}

void StateSpace::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n ||
      D.rows() != C.rows() || D.cols() != B.cols()) {
    std::ostringstream os;
    os << "inconsistent state-space blocks: A " << A.rows() << "x" << A.cols()
       << ", B " << B.rows() << "x" << B.cols() << ", C " << C.rows() << "x"
       << C.cols() << ", D " << D.rows() << "x" << D.cols();
    throw dimension_error(os.str());
  }
}

StateSpace StateSpace::static_gain(const Matrix& d) {
  return StateSpace(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
}

namespace numlin {
namespace {

void require_square(const Matrix& a, const char* name) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << name << " must be square, got " << a.rows() << "x" << a.cols();
    throw dimension_error(os.str());
  }
}

void require_finite(const Matrix& a, const char* name) {
  if (!a.allFinite()) {
    throw contract_error(std::string(name) + " has non-finite entries");
  }
}

// Diagonal similarity scaling by powers of two (Parlett-Reinsch) so that row
// and column norms are comparable. Eigenvalues are unchanged.
Matrix balanced(Matrix a) {
  constexpr double kRadix = 2.0;
  constexpr double kRadixSq = kRadix * kRadix;
  const auto n = a.rows();
  bool done = false;
  int sweeps = 0;
  while (!done && sweeps++ < 100) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / kRadix;
      while (c < g) {
        f *= kRadix;
        c *= kRadixSq;
      }
      g = r * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kRadixSq;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
  return a;
}

Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  const auto n = a.rows();
  const auto m = b.cols();
  Matrix r(n, n * m);
  if (n == 0) return r;
  r.leftCols(m) = b;
  for (Eigen::Index k = 1; k < n; ++k) {
    r.middleCols(k * m, m) = a * r.middleCols((k - 1) * m, m);
  }
  return r;
}

Matrix poly_of_matrix(const Matrix& a, const std::vector<double>& coeffs) {
  // Horner: A^n + c_{n-1} A^{n-1} + ... + c0 I.
  const auto n = a.rows();
  Matrix acc = Matrix::Identity(n, n);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    acc = a * acc + (*it) * Matrix::Identity(n, n);
  }
  return acc;
}

bool char_poly_matches(const Matrix& closed, const std::vector<Complex>& desired) {
  const Spectrum eig = eigenvalues(closed);
  std::vector<Complex> got(eig.data(), eig.data() + eig.size());
  const auto have = poly_from_roots(got);
  const auto want = poly_from_roots(desired);
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (std::abs(have[i] - want[i]) > 1e-6 * std::max(1.0, std::abs(want[i]))) {
      return false;
    }
  }
  return true;
}

Matrix ackermann(const Matrix& a, const Matrix& b,
                 const std::vector<Complex>& desired) {
  const auto n = a.rows();
  const Matrix ctrb = controllability_matrix(a, b);
  if (numeric_rank(ctrb, "controllability") < n) {
    throw Error(ErrorKind::kSynthesis, "UNCONTROLLABLE",
                "pole placement requires a controllable pair");
  }
  const Matrix phi = poly_of_matrix(a, poly_from_roots(desired));
  const Matrix x = ctrb.colPivHouseholderQr().solve(phi);
  return x.row(n - 1);
}

}  // namespace

Spectrum eigenvalues(const Matrix& a) {
  require_square(a, "eigenvalue input");
  require_finite(a, "eigenvalue input");
  if (a.rows() == 0) return Spectrum(0);
  Eigen::EigenSolver<Matrix> solver(balanced(a), false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "EIGEN_FAILED",
                "eigenvalue iteration did not converge");
  }
  return solver.eigenvalues();
}

double spectral_abscissa(const Matrix& a) {
  const Spectrum eig = eigenvalues(a);
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eig.size(); ++i) best = std::max(best, eig[i].real());
  return best;
}

bool is_hurwitz(const Matrix& a, double margin) {
  if (margin < 0.0) throw contract_error("Hurwitz margin must be nonnegative");
  return spectral_abscissa(a) < -std::max(margin, kHurwitzTolerance);
}

Matrix sylvester_solve(const Matrix& a, const Matrix& b, const Matrix& c) {
  require_square(a, "Sylvester A");
  require_square(b, "Sylvester B");
  const auto n = a.rows();
  const auto m = b.rows();
  if (c.rows() != n || c.cols() != m) {
    throw dimension_error("Sylvester right-hand side has the wrong shape");
  }
  if (n == 0 || m == 0) return Matrix::Zero(n, m);

  const Spectrum ea = eigenvalues(a);
  const Spectrum eb = eigenvalues(b);
  double sep = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) sep = std::min(sep, std::abs(ea[i] + eb[j]));
  const double scale = std::max(1.0, a.norm() + b.norm());
  if (sep <= 1e-10 * scale) {
    throw Error(ErrorKind::kNumerical, "NO_SOLUTION",
                "Sylvester operator is singular (spectra of A and -B meet)");
  }

  // vec(A X + X B) = (I_m (x) A + B^T (x) I_n) vec(X)
  Matrix k = Matrix::Zero(n * m, n * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    k.block(j * n, j * n, n, n) += a;
    for (Eigen::Index l = 0; l < m; ++l) {
      k.block(j * n, l * n, n, n).diagonal().array() += b(l, j);
    }
  }
  const Vector rhs = Eigen::Map<const Vector>(c.data(), n * m);
  const Vector sol = k.partialPivLu().solve(rhs);
  Matrix x = Eigen::Map<const Matrix>(sol.data(), n, m);
  if (!x.allFinite()) {
    throw Error(ErrorKind::kNumerical, "NO_SOLUTION", "Sylvester solve produced non-finite values");
  }
  return x;
}

Matrix lyap_solve(const Matrix& a, const Matrix& q) {
  require_square(a, "Lyapunov A");
  require_square(q, "Lyapunov Q");
  if (a.rows() != q.rows()) throw dimension_error("Lyapunov A and Q sizes differ");
  const double qscale = std::max(1.0, q.norm());
  if ((q - q.transpose()).norm() > 1e-12 * qscale) {
    throw contract_error("Lyapunov right-hand side Q must be symmetric");
  }
  if (a.rows() == 0) return Matrix(0, 0);
  if (!is_hurwitz(a)) {
    throw Error(ErrorKind::kNumerical, "NO_SOLUTION",
                "Lyapunov equation has no positive definite solution: A is not Hurwitz");
  }
  Matrix p = sylvester_solve(a.transpose(), a, -q);
  p = 0.5 * (p + p.transpose());
  return p;
}

Matrix expm(const Matrix& a, double h) {
  require_square(a, "expm input");
  if (!std::isfinite(h)) throw contract_error("expm step must be finite");
  if (a.rows() == 0) return Matrix(0, 0);
  const Matrix scaled = a * h;
  return scaled.exp();
}

ComplexMatrix frequency_response(const StateSpace& sys, double omega) {
  sys.validate();
  const auto n = sys.states();
  ComplexMatrix g = sys.D.cast<Complex>();
  if (n == 0 || sys.inputs() == 0 || sys.outputs() == 0) return g;
  ComplexMatrix m = -sys.A.cast<Complex>();
  m.diagonal().array() += Complex(0.0, omega);
  const ComplexMatrix x = m.partialPivLu().solve(sys.B.cast<Complex>());
  g += sys.C.cast<Complex>() * x;
  return g;
}

double sigma_max(const ComplexMatrix& g) {
  if (g.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(g);
  return svd.singularValues()(0);
}

double sigma_max(const Matrix& g) {
  if (g.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(g);
  return svd.singularValues()(0);
}

namespace {

// Frequencies w >= 0 for which jw is (numerically) an eigenvalue of the
// Hamiltonian associated with level gamma.
std::vector<double> hamiltonian_crossings(const StateSpace& sys, double gamma) {
  const auto n = sys.states();
  const auto m = sys.inputs();
  const auto p = sys.outputs();
  const Matrix& a = sys.A;
  const Matrix& b = sys.B;
  const Matrix& c = sys.C;
  const Matrix& d = sys.D;

  const Matrix r = gamma * gamma * Matrix::Identity(m, m) - d.transpose() * d;
  const auto r_lu = r.partialPivLu();
  const Matrix r_inv_dt_c = r_lu.solve(d.transpose() * c);
  const Matrix r_inv_bt = r_lu.solve(b.transpose());
  const Matrix a_h = a + b * r_inv_dt_c;

  Matrix h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = a_h;
  h.topRightCorner(n, n) = b * r_inv_bt;
  h.bottomLeftCorner(n, n) =
      -c.transpose() * (Matrix::Identity(p, p) + d * r_lu.solve(d.transpose())) * c;
  h.bottomRightCorner(n, n) = -a_h.transpose();

  const Spectrum eig = eigenvalues(h);
  std::vector<double> freqs;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double mag = std::abs(eig[i]);
    if (std::abs(eig[i].real()) <= 1e-5 * std::max(1.0, mag) && eig[i].imag() >= 0.0) {
      freqs.push_back(eig[i].imag());
    }
  }
  std::sort(freqs.begin(), freqs.end());
  return freqs;
}

}  // namespace

double hinf_norm(const StateSpace& sys, double tol) {
  sys.validate();
  if (!(tol > 0.0)) throw contract_error("H-infinity tolerance must be positive");
  const double d_norm = sigma_max(sys.D);
  if (sys.states() == 0 || sys.inputs() == 0 || sys.outputs() == 0) return d_norm;
  if (!is_hurwitz(sys.A)) {
    throw Error(ErrorKind::kNumerical, "INFINITE_NORM",
                "H-infinity norm is unbounded: state matrix is not Hurwitz");
  }
  if (sys.B.isZero(0.0) || sys.C.isZero(0.0)) return d_norm;

  // Lower bound from a coarse sample of frequencies around the pole magnitudes.
  const Spectrum poles = eigenvalues(sys.A);
  std::vector<double> sample{0.0};
  double lo_mag = std::numeric_limits<double>::infinity();
  double hi_mag = 0.0;
  for (Eigen::Index i = 0; i < poles.size(); ++i) {
    const double mag = std::abs(poles[i]);
    sample.push_back(std::abs(poles[i].imag()));
    sample.push_back(mag);
    lo_mag = std::min(lo_mag, mag);
    hi_mag = std::max(hi_mag, mag);
  }
  lo_mag = std::max(lo_mag, 1e-6);
  hi_mag = std::max(hi_mag, lo_mag);
  constexpr int kGrid = 60;
  const double l0 = std::log10(lo_mag) - 1.0;
  const double l1 = std::log10(hi_mag) + 1.0;
  for (int k = 0; k < kGrid; ++k) {
    sample.push_back(std::pow(10.0, l0 + (l1 - l0) * k / (kGrid - 1)));
  }
  double lb = d_norm;
  for (double w : sample) lb = std::max(lb, sigma_max(frequency_response(sys, w)));
  if (lb <= 0.0) lb = std::numeric_limits<double>::min();

  // Returns the best verified sigma_max found at the crossing frequencies
  // (and midpoints between them), or -1 when no crossing exists.
  auto probe = [&](double gamma) {
    const auto freqs = hamiltonian_crossings(sys, gamma);
    if (freqs.empty()) return -1.0;
    double best = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      best = std::max(best, sigma_max(frequency_response(sys, freqs[i])));
      if (i + 1 < freqs.size()) {
        const double mid = 0.5 * (freqs[i] + freqs[i + 1]);
        best = std::max(best, sigma_max(frequency_response(sys, mid)));
      }
    }
    return best;
  };

  double ub = 10.0 * lb;
  for (int grow = 0; grow < 60; ++grow) {
    const double best = probe(ub);
    if (best < ub) break;
    lb = std::max(lb, best);
    ub *= 10.0;
  }

  for (int iter = 0; iter < 200 && ub - lb > tol * lb; ++iter) {
    const double gamma = 0.5 * (lb + ub);
    const double best = probe(gamma);
    if (best >= gamma) {
      lb = std::max(lb, best);
    } else {
      if (best > lb) lb = best;
      ub = gamma;
    }
  }
  return 0.5 * (lb + ub);
}

std::vector<double> poly_from_roots(const std::vector<Complex>& roots) {
  std::vector<Complex> c{Complex(1.0, 0.0)};  // highest degree first
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i] * r;
    }
    c = std::move(next);
  }
  // Return ascending coefficients without the leading 1.
  const std::size_t n = roots.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = c[n - k].real();
  return out;
}

bool is_conjugate_closed(const std::vector<Complex>& values, double tol) {
  std::vector<bool> used(values.size(), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (used[i]) continue;
    const Complex& v = values[i];
    if (std::abs(v.imag()) <= tol) {
      used[i] = true;
      continue;
    }
    bool found = false;
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (!used[j] && std::abs(values[j] - std::conj(v)) <= tol) {
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

bool spectra_match(const Spectrum& a, const std::vector<Complex>& b, double tol) {
  if (static_cast<std::size_t>(a.size()) != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = b.size();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(a[i] - b[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best_j == b.size() || best > tol) return false;
    used[best_j] = true;
  }
  return true;
}

bool spectra_match(const Spectrum& a, const Spectrum& b, double tol) {
  return spectra_match(a, std::vector<Complex>(b.data(), b.data() + b.size()), tol);
}

namespace {

template <typename Values>
Eigen::Index rank_from_singular_values(const Values& s, std::string_view test) {
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double threshold = kRankThreshold * s(0);
  const double band = std::pow(10.0, kRankBandDecades);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > threshold * band) {
      ++rank;
    } else if (s(i) >= threshold / band) {
      std::ostringstream os;
      os << "rank decision for '" << test << "' is numerically ambiguous (singular value "
         << s(i) << " relative " << s(i) / s(0) << ")";
      throw Error(ErrorKind::kNumerical, "RANK_INDETERMINATE", os.str());
    }
  }
  return rank;
}

}  // namespace

Eigen::Index numeric_rank(const Matrix& m, std::string_view test) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return rank_from_singular_values(svd.singularValues(), test);
}

Eigen::Index numeric_rank(const ComplexMatrix& m, std::string_view test) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return rank_from_singular_values(svd.singularValues(), test);
}

Matrix orth(const Matrix& m, std::string_view test) {
  if (m.size() == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  const auto r = rank_from_singular_values(svd.singularValues(), test);
  return svd.matrixU().leftCols(r);
}

Matrix null_space(const Matrix& m, std::string_view test) {
  const auto n = m.cols();
  if (m.rows() == 0) return Matrix::Identity(n, n);
  if (n == 0) return Matrix(0, 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto r = rank_from_singular_values(svd.singularValues(), test);
  return svd.matrixV().rightCols(n - r);
}

Matrix controllable_subspace(const Matrix& a, const Matrix& b) {
  require_square(a, "controllability A");
  if (b.rows() != a.rows()) throw dimension_error("controllability B rows differ from A");
  Matrix basis = orth(b, "controllable subspace");
  while (basis.cols() < a.rows()) {
    Matrix grown(a.rows(), 2 * basis.cols());
    grown << basis, a * basis;
    Matrix next = orth(grown, "controllable subspace");
    if (next.cols() == basis.cols()) break;
    basis = std::move(next);
  }
  return basis;
}

Matrix place_poles(const Matrix& a, const Matrix& b, const std::vector<Complex>& desired) {
  require_square(a, "pole placement A");
  require_finite(a, "pole placement A");
  const auto n = a.rows();
  const auto m = b.cols();
  if (b.rows() != n) throw dimension_error("pole placement B rows differ from A");
  if (static_cast<Eigen::Index>(desired.size()) != n) {
    throw contract_error("pole placement needs exactly dim(A) desired poles");
  }
  if (!is_conjugate_closed(desired)) {
    throw contract_error("desired poles must be closed under conjugation");
  }
  if (n == 0) return Matrix(m, 0);
  if (m == 0) {
    throw Error(ErrorKind::kSynthesis, "UNCONTROLLABLE", "pole placement with no inputs");
  }
  if (numeric_rank(controllability_matrix(a, b), "controllability") < n) {
    throw Error(ErrorKind::kSynthesis, "UNCONTROLLABLE",
                "pole placement requires a controllable pair");
  }

  if (m == 1) {
    Matrix f = ackermann(a, b, desired);
    if (!char_poly_matches(a - b * f, desired)) {
      throw Error(ErrorKind::kSynthesis, "PLACEMENT_INACCURATE",
                  "placed spectrum deviates from the request");
    }
    return f;
  }

  // Multi-input: a random feedback makes A cyclic, after which a random input
  // combination is controllable (Heymann); place with the single-input rule.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::max(1.0, a.norm()) / std::max(1e-12, b.norm());
  for (int attempt = 0; attempt < 25; ++attempt) {
    Matrix fr(m, n);
    Matrix g(m, 1);
    for (Eigen::Index i = 0; i < fr.size(); ++i) fr.data()[i] = scale * normal(rng);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
    if (attempt == 0) fr.setZero();
    const Matrix a1 = a + b * fr;
    const Matrix b1 = b * g;
    try {
      const Matrix k = ackermann(a1, b1, desired);
      Matrix f = -fr + g * k;
      if (char_poly_matches(a - b * f, desired)) return f;
    } catch (const Error&) {
      // try another combination
    }
  }
  throw Error(ErrorKind::kSynthesis, "PLACEMENT_FAILED",
              "could not find a reliable multi-input placement");
}

}  // namespace numlin
}  // namespace synctool
