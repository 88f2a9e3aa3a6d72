#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synctool/numlin.hpp"

using namespace synctool;
using namespace synctool::numlin;
using fixtures::mat;

namespace {

Matrix random_hurwitz(int n, std::mt19937_64& rng, double margin = 0.1) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  const double shift = spectral_abscissa(a) + margin + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  a.diagonal().array() -= shift;
  return a;
}

Matrix randn(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

}  // namespace

TEST_CASE("eigenvalues of small known matrices") {
  const Spectrum rot = eigenvalues(mat(2, 2, {0, 1, -1, 0}));
  CHECK(spectra_match(rot, std::vector<Complex>{{0, 1}, {0, -1}}, 1e-12));

  const auto target = fixtures::example_target();
  CHECK(spectra_match(eigenvalues(target.a_d()), std::vector<Complex>{{0, 0}, {0, 1}, {0, -1}}, 1e-10));
  // Roots of s^3 + s from the oracle's characteristic polynomial.
  const auto cp = oracle::char_poly(target.a_d());
  CHECK(cp[0] == doctest::Approx(0.0));
  CHECK(cp[1] == doctest::Approx(1.0));
  CHECK(cp[2] == doctest::Approx(0.0));

  const Matrix closed = target.a_bar() - target.b_bar() * mat(1, 3, {30, 31, 10});
  CHECK(spectra_match(eigenvalues(closed), std::vector<Complex>{{-2, 0}, {-3, 0}, {-5, 0}}, 1e-9));
  // Brute-force check: the companion polynomial vanishes at -2, -3, -5.
  for (double r : {-2.0, -3.0, -5.0}) CHECK(r * r * r + 10 * r * r + 31 * r + 30 == doctest::Approx(0.0));

  CHECK_THROWS_AS(eigenvalues(Matrix(2, 3)), Error);
}

TEST_CASE("Hurwitz test") {
  CHECK(is_hurwitz(mat(2, 2, {-1, 0, 0, -2})));
  CHECK_FALSE(is_hurwitz(mat(2, 2, {0, 1, 0, 0})));
  CHECK_FALSE(is_hurwitz(mat(2, 2, {-1, 0, 0, -2}), 1.5));
  // Abar1 + Bbar1 Gamma2 - K2 Cbar1 with K2 = (1, 1).
  const Matrix ak = mat(2, 2, {-1, 1, -2, 0});
  CHECK(is_hurwitz(ak));
  CHECK(spectra_match(eigenvalues(ak), std::vector<Complex>{{-0.5, std::sqrt(7.0) / 2}, {-0.5, -std::sqrt(7.0) / 2}},
                      1e-12));
  CHECK(spectral_abscissa(Matrix(0, 0)) < -1e300);
}

TEST_CASE("Lyapunov solve") {
  CHECK(lyap_solve(mat(1, 1, {-1}), mat(1, 1, {2}))(0, 0) == doctest::Approx(1.0));
  const Matrix p = lyap_solve(mat(2, 2, {-1, 0, 0, -2}), Matrix::Identity(2, 2));
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 1) == doctest::Approx(0.25));
  CHECK(std::abs(p(0, 1)) < 1e-14);

  const Matrix ak = mat(2, 2, {-1, 1, -2, 0});
  const Matrix q = 3.0 * Matrix::Identity(2, 2);
  const Matrix pk = lyap_solve(ak, q);
  CHECK((ak.transpose() * pk + pk * ak + q).norm() <= 1e-10 * 3.0);
  // Vectorized elimination written out for the 2x2 case.
  Eigen::Matrix<double, 3, 3> m;
  // unknowns p11, p12, p22 of the symmetric P
  m << 2 * ak(0, 0), 2 * ak(1, 0), 0, ak(0, 1), ak(0, 0) + ak(1, 1), ak(1, 0), 0, 2 * ak(0, 1), 2 * ak(1, 1);
  const Eigen::Vector3d sol = m.fullPivLu().solve(Eigen::Vector3d(-3, 0, -3));
  CHECK(pk(0, 0) == doctest::Approx(sol[0]));
  CHECK(pk(0, 1) == doctest::Approx(sol[1]));
  CHECK(pk(1, 1) == doctest::Approx(sol[2]));

  CHECK_THROWS_AS(lyap_solve(mat(1, 1, {1}), mat(1, 1, {1})), Error);
  try {
    lyap_solve(mat(1, 1, {0}), mat(1, 1, {1}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "NO_SOLUTION");
  }
  CHECK_THROWS_AS(lyap_solve(mat(2, 2, {-1, 0, 0, -1}), mat(2, 2, {1, 1, 0, 1})), Error);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 12;
    const Matrix a = random_hurwitz(n, rng);
    const Matrix r = randn(n, n, rng);
    const Matrix qq = r * r.transpose() + Matrix::Identity(n, n);
    const Matrix pp = lyap_solve(a, qq);
    const double qn = sigma_max(qq);
    CHECK(sigma_max(Matrix(a.transpose() * pp + pp * a + qq)) <= 1e-10 * qn);
  }
}

TEST_CASE("matrix exponential") {
  CHECK(expm(Matrix::Zero(3, 3), 2.5).isApprox(Matrix::Identity(3, 3)));
  CHECK(expm(mat(2, 2, {0, 1, 0, 0}), 1.0).isApprox(mat(2, 2, {1, 1, 0, 1}), 1e-15));
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_hurwitz(5, rng);
    const Matrix e = expm(a, 0.1);
    const Matrix t = oracle::expm_taylor(a, 0.1);
    CHECK((e - t).norm() <= 1e-9 * t.norm());
    for (double h : {0.01, 0.1, 1.0}) {
      const Matrix e1 = expm(a, h);
      const Matrix e2 = expm(a, 2 * h);
      CHECK((e1 * e1 - e2).norm() <= 1e-9 * e2.norm());
    }
  }
}

TEST_CASE("H-infinity norm on known systems") {
  CHECK(hinf_norm(StateSpace(mat(1, 1, {-1}), mat(1, 1, {1}), mat(1, 1, {1}))) == doctest::Approx(1.0).epsilon(1e-6));
  const StateSpace res(mat(2, 2, {0, 1, -1, -0.2}), mat(2, 1, {0, 1}), mat(1, 2, {1, 0}));
  const double expected = 1.0 / (2 * 0.1 * std::sqrt(1 - 0.01));
  CHECK(hinf_norm(res) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(oracle::grid_peak(res.A, res.B, res.C, res.D, 20000, 0.5, 2.0) == doctest::Approx(expected).epsilon(1e-6));
  const Matrix d = mat(2, 2, {1, 2, 3, 4});
  CHECK(hinf_norm(StateSpace::static_gain(d)) == doctest::Approx(sigma_max(d)).epsilon(1e-9));
  try {
    hinf_norm(StateSpace(mat(1, 1, {1}), mat(1, 1, {1}), mat(1, 1, {1})));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "INFINITE_NORM");
  }
}

TEST_CASE("H-infinity norm agrees with a dense frequency grid") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    const int m = 1 + trial % 3;
    const int p = 1 + (trial / 3) % 3;
    const StateSpace sys(random_hurwitz(n, rng, 0.3), randn(n, m, rng), randn(p, n, rng), randn(p, m, rng) * 0.1);
    const double h = hinf_norm(sys);
    const double g = oracle::grid_peak(sys.A, sys.B, sys.C, sys.D, 10000, 1e-3, 1e3);
    CHECK(h >= g * (1 - 1e-6));
    CHECK(std::abs(h - g) <= 1e-4 * h);
  }
}

TEST_CASE("H-infinity norm is submultiplicative") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSpace g1(random_hurwitz(3, rng), randn(3, 1, rng), randn(1, 3, rng));
    const StateSpace g2(random_hurwitz(2, rng), randn(2, 1, rng), randn(1, 2, rng));
    // g2 after g1 as a plain block realization.
    Matrix a = Matrix::Zero(5, 5);
    a.topLeftCorner(3, 3) = g1.A;
    a.bottomRightCorner(2, 2) = g2.A;
    a.bottomLeftCorner(2, 3) = g2.B * g1.C;
    Matrix b = Matrix::Zero(5, 1);
    b.topRows(3) = g1.B;
    Matrix c = Matrix::Zero(1, 5);
    c.rightCols(2) = g2.C;
    CHECK(hinf_norm(StateSpace(a, b, c)) <= hinf_norm(g1) * hinf_norm(g2) + 1e-6);
  }
}

TEST_CASE("pole placement") {
  const auto t = fixtures::example_target();
  const std::vector<Complex> want{{-2, 0}, {-3, 0}, {-5, 0}};
  const Matrix f = place_poles(t.a_bar(), t.b_bar(), want);
  CHECK(f.isApprox(mat(1, 3, {30, 31, 10}), 1e-9));
  CHECK(spectra_match(eigenvalues(t.a_bar() - t.b_bar() * f), want, 1e-6));
  CHECK(place_poles(mat(1, 1, {0}), mat(1, 1, {1}), {{-1, 0}})(0, 0) == doctest::Approx(1.0));

  const Matrix a1 = t.a1() + t.b1() * t.gamma2();
  const std::vector<Complex> obs{{-1, 1}, {-1, -1}};
  const Matrix k2 = place_poles(a1.transpose(), t.c1().transpose(), obs).transpose();
  CHECK(spectra_match(eigenvalues(Matrix(a1 - k2 * t.c1())), obs, 1e-6));

  try {
    place_poles(mat(2, 2, {-1, 0, 0, -2}), mat(2, 1, {1, 0}), {{-1, 0}, {-3, 0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSynthesis);
  }

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    const int m = 1 + trial % 2;
    const Matrix a = randn(n, n, rng);
    const Matrix b = randn(n, m, rng);
    std::vector<Complex> poles;
    for (int k = 0; k < n; ++k) poles.emplace_back(-1.0 - 0.5 * k, 0.0);
    if (n >= 3) {
      poles[0] = {-1.0, 1.0};
      poles[1] = {-1.0, -1.0};
    }
    const Matrix fk = place_poles(a, b, poles);
    CHECK(spectra_match(eigenvalues(Matrix(a - b * fk)), poles, 1e-6));
  }
}

TEST_CASE("rank decisions refuse the indeterminate band") {
  CHECK(numeric_rank(mat(2, 2, {1, 0, 0, 1e-12}), "test") == 1);
  CHECK(numeric_rank(mat(2, 2, {1, 0, 0, 1e-4}), "test") == 2);
  try {
    numeric_rank(mat(2, 2, {1, 0, 0, 1e-8}), "probe");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "RANK_INDETERMINATE");
    CHECK(std::string(e.what()).find("probe") != std::string::npos);
  }
  const Matrix ns = null_space(mat(1, 3, {1, 1, 0}), "test");
  CHECK(ns.cols() == 2);
  CHECK((mat(1, 3, {1, 1, 0}) * ns).norm() < 1e-14);
}

TEST_CASE("Sylvester solve") {
  std::mt19937_64 rng(3);
  const Matrix a = random_hurwitz(4, rng);
  const Matrix b = random_hurwitz(3, rng);
  const Matrix c = randn(4, 3, rng);
  const Matrix x = sylvester_solve(a, b, c);
  CHECK((a * x + x * b - c).norm() < 1e-10 * c.norm());
  CHECK_THROWS_AS(sylvester_solve(mat(1, 1, {1}), mat(1, 1, {-1}), mat(1, 1, {1})), Error);
}
