#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synctool/homog.hpp"
#include "synctool/numlin.hpp"

using namespace synctool;
using namespace synctool::homog;
using fixtures::mat;

namespace {

// Markov terms of the compensated agent computed directly from the cascade
// equations, independent of the library's composition.
std::vector<Matrix> cascade_markov(const lti::AgentModel& ag, const Precompensator& pre, int k) {
  const auto n = ag.states();
  const auto np = pre.states();
  Matrix a(n + np, n + np);
  a << ag.dyn.A + ag.dyn.B * pre.R2 * ag.Cm, ag.dyn.B * pre.Q, pre.H2 * ag.Cm, pre.G;
  Matrix b(n + np, pre.H1.cols());
  b << ag.dyn.B * pre.R1, pre.H1;
  Matrix c(ag.outputs(), n + np);
  c << ag.dyn.C, Matrix::Zero(ag.outputs(), np);
  std::vector<Matrix> out;
  Matrix ak = Matrix::Identity(n + np, n + np);
  for (int j = 0; j < k; ++j) {
    out.push_back(c * ak * b);
    ak = ak * a;
  }
  return out;
}

}  // namespace

TEST_CASE("target model structure") {
  const TargetModel t = fixtures::example_target();
  CHECK(t.order() == 3);
  CHECK(t.a_bar() == mat(3, 3, {0, 1, 0, 0, 0, 1, 0, 0, 0}));
  CHECK(t.b_bar() == mat(3, 1, {0, 0, 1}));
  CHECK(t.c_bar() == mat(1, 3, {1, 0, 0}));
  CHECK(t.a_d()(2, 1) == -1.0);
  CHECK(t.gamma1().cols() == 1);
  CHECK(t.gamma2().cols() == 2);
  CHECK_THROWS_AS(build_target(1, 2, mat(1, 2, {1, 0})), Error);
  CHECK_THROWS_AS(build_target(1, 3, mat(1, 2, {0, 0})), Error);
}

TEST_CASE("example families homogenize to the target") {
  const TargetModel t = fixtures::example_target();
  const int k = 2 * 5 + 2;
  // Target Markov terms by explicit powers.
  std::vector<Matrix> want;
  Matrix ak = Matrix::Identity(3, 3);
  for (int j = 0; j < k; ++j) {
    want.push_back(t.c_bar() * ak * t.b_bar());
    ak = ak * t.a_d();
  }
  for (const auto& ag : {fixtures::family1(), fixtures::family2(), fixtures::family3(), fixtures::family5()}) {
    const Design d = design_precompensator(ag, t);
    const HomogReport rep = verify_homogenization(d.comp, t);
    CHECK(rep.passed);
    CHECK(rep.internal_hurwitz);
    CHECK(rep.max_deviation <= 1e-8);
    const auto got = cascade_markov(ag, d.pre, k);
    for (int j = 0; j < k; ++j) CHECK((got[j] - want[j]).norm() <= 1e-8 * std::max(1.0, want[j].norm()));
    // Intertwining and embedding identities.
    const Matrix m = d.comp.to_target;
    CHECK((m * d.comp.dyn.A - t.a_d() * m).norm() < 1e-8);
    CHECK((m * d.comp.embedding - Matrix::Identity(3, 3)).norm() < 1e-8);
    CHECK((d.comp.dyn.A * d.comp.embedding - d.comp.embedding * t.a_d()).norm() < 1e-8);
    CHECK((d.comp.Ebar - m * d.comp.E).norm() < 1e-12);
    CHECK(numlin::is_hurwitz(d.comp.internal_stable_part.A));
  }
}

TEST_CASE("the triple integrator needs only a static pre-compensator") {
  const TargetModel t = fixtures::example_target();
  const Design d = design_precompensator(fixtures::family2(), t);
  CHECK(d.pre.states() == 0);
  CHECK(d.pre.R1(0, 0) == doctest::Approx(1.0));
  CHECK(d.pre.R2.isApprox(mat(1, 3, {0, -1, 0}), 1e-12));
}

TEST_CASE("homogenization fails honestly outside the supported class") {
  const TargetModel t = fixtures::example_target();
  // Relative degree 4 exceeds n_q = 3.
  const lti::AgentModel deep(
      mat(4, 4, {0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0}), mat(4, 1, {0, 0, 0, 1}), mat(1, 4, {1, 0, 0, 0}),
      mat(4, 1, {1, 0, 0, 0}), Matrix::Identity(4, 4));
  CHECK_THROWS_AS(design_precompensator(deep, t), Error);
  // Non-minimum-phase zero at s = 1 with no spare input.
  const lti::AgentModel nmp(mat(2, 2, {0, 1, 0, 0}), mat(2, 1, {0, 1}), mat(1, 2, {-1, 1}), mat(2, 1, {1, 0}),
                            Matrix::Identity(2, 2));
  try {
    design_precompensator(nmp, t);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "NON_MINIMUM_PHASE");
    CHECK(e.kind() == ErrorKind::kUnsupported);
  }
  // Partial measurement.
  const lti::AgentModel partial(mat(2, 2, {0, 1, 0, 0}), mat(2, 1, {0, 1}), mat(1, 2, {1, 0}), mat(2, 1, {1, 0}),
                                mat(1, 2, {1, 0}));
  CHECK_THROWS_AS(design_precompensator(partial, t), Error);
  // Not stabilizable.
  const lti::AgentModel bad(mat(2, 2, {1, 0, 0, 0}), mat(2, 1, {0, 1}), mat(1, 2, {0, 1}), mat(2, 1, {1, 0}),
                            Matrix::Identity(2, 2));
  try {
    design_precompensator(bad, t);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "ASSUMPTION_VIOLATED");
  }
}

TEST_CASE("random minimum-phase SISO agents homogenize") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  const TargetModel t = fixtures::example_target();
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int rd = 1 + trial % 3;
    const int n = rd + (trial / 3) % 3;
    Matrix a = Matrix::Zero(n, n);
    a.topRightCorner(n - 1, n - 1).setIdentity();
    for (int j = 0; j < n; ++j) a(n - 1, j) = g(rng);
    Matrix b = Matrix::Zero(n, 1);
    b(n - 1, 0) = 1.0;
    // Numerator with roots at -1, -2, ... (minimum phase).
    std::vector<numlin::Complex> zeros;
    for (int z = 0; z < n - rd; ++z) zeros.emplace_back(-1.0 - z, 0.0);
    const auto num = numlin::poly_from_roots(zeros);
    Matrix c = Matrix::Zero(1, n);
    for (int j = 0; j < n - rd; ++j) c(0, j) = num[static_cast<std::size_t>(j)];
    c(0, n - rd) = 1.0;
    const lti::AgentModel ag(a, b, c, Matrix::Ones(n, 1), Matrix::Identity(n, n));
    const Design d = design_precompensator(ag, t);
    CHECK(verify_homogenization(d.comp, t).passed);
    ++checked;
  }
  CHECK(checked == 30);
}

TEST_CASE("exosystem remodeling") {
  const Exosystem osc{mat(2, 2, {0, 1, -1, 0}), mat(1, 2, {1, 0}), mat(2, 1, {1, 0})};
  const auto mu = minimal_polynomial(osc.Cr, osc.Ar);
  REQUIRE(mu.size() == 2);
  CHECK(mu[0] == doctest::Approx(1.0));
  CHECK(std::abs(mu[1]) < 1e-12);
  const TargetModel t = remodel_exosystem(osc, 3);
  CHECK(t.n_q() == 3);
  // s (s^2 + 1): the target state matrix has characteristic polynomial s^3 + s.
  const auto cp = oracle::char_poly(t.a_d());
  CHECK(cp[0] == doctest::Approx(0.0));
  CHECK(cp[1] == doctest::Approx(1.0));
  CHECK(std::abs(cp[2]) < 1e-12);
  const auto mr = exosystem_embedding(t, osc);
  REQUIRE(mr.has_value());
  CHECK((t.a_d() * *mr - *mr * osc.Ar).norm() < 1e-10);
  CHECK((t.c_bar() * *mr - osc.Cr).norm() < 1e-10);

  const Exosystem unstable{mat(1, 1, {1}), mat(1, 1, {1}), mat(1, 1, {1})};
  CHECK_THROWS_AS(unstable.validate(), Error);
  // A target that cannot produce the reference signal.
  CHECK_FALSE(exosystem_embedding(build_target(1, 3, mat(1, 3, {0, 0, 0})), osc).has_value());
}
