#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synctool/lti.hpp"
#include "synctool/numlin.hpp"

using namespace synctool;
using namespace synctool::lti;
using fixtures::mat;

TEST_CASE("agent validation reports shapes") {
  CHECK_THROWS_AS(AgentModel(Matrix::Zero(3, 3), Matrix::Zero(2, 1), Matrix::Zero(1, 3), Matrix::Zero(3, 1),
                             Matrix::Identity(3, 3)),
                  Error);
  try {
    AgentModel(Matrix::Zero(3, 3), Matrix::Zero(3, 1), Matrix::Zero(1, 2), Matrix::Zero(3, 1), Matrix::Identity(3, 3));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimension);
  }
  const AgentModel a = fixtures::family3();
  CHECK(a.states() == 5);
  CHECK(a.inputs() == 2);
  CHECK(a.outputs() == 1);
  CHECK(a.disturbances() == 1);
  CHECK(a.measurements() == 5);
}

TEST_CASE("Markov parameters and series composition") {
  const AgentModel a = fixtures::family2();
  const auto mk = markov_params(a.dyn, 5);
  REQUIRE(mk.size() == 5);
  CHECK(mk[0].norm() == 0.0);
  CHECK(mk[1].norm() == 0.0);
  CHECK(mk[2].norm() == 0.0);
  CHECK(mk[3](0, 0) == 1.0);
  CHECK(mk[4](0, 0) == 0.0);

  const StateSpace g1(mat(1, 1, {-1}), mat(1, 1, {1}), mat(1, 1, {2}));
  const StateSpace g2(mat(1, 1, {-3}), mat(1, 1, {1}), mat(1, 1, {1}), mat(1, 1, {0.5}));
  const StateSpace s = series(g1, g2);
  for (double w : {0.0, 0.3, 2.0}) {
    const auto t = oracle::transfer(s.A, s.B, s.C, s.D, {0.0, w});
    const auto t1 = oracle::transfer(g1.A, g1.B, g1.C, g1.D, {0.0, w});
    const auto t2 = oracle::transfer(g2.A, g2.B, g2.C, g2.D, {0.0, w});
    CHECK(std::abs(t(0, 0) - t2(0, 0) * t1(0, 0)) < 1e-12);
  }
  const StateSpace fb = feedback(g1, StateSpace::static_gain(mat(1, 1, {1})));
  CHECK(fb.A(0, 0) == doctest::Approx(-3.0));
  const StateSpace ap = append(g1, g2);
  CHECK(ap.inputs() == 2);
  CHECK(ap.outputs() == 2);
}

TEST_CASE("structural properties of the example families") {
  for (const auto& a : {fixtures::family1(), fixtures::family2(), fixtures::family3(), fixtures::family5()}) {
    const auto r = structural_analysis(a);
    CHECK(r.stabilizable);
    CHECK(r.detectable);
    CHECK(r.right_invertible);
    CHECK(r.n_q0_contribution <= 3);
  }
  CHECK(structural_analysis(fixtures::family2()).infinite_zero_orders == std::vector<int>{3});
  CHECK(structural_analysis(fixtures::family5()).infinite_zero_orders == std::vector<int>{3});
  std::vector<AgentModel> all;
  for (int k = 1; k <= 10; ++k) all.push_back(fixtures::example_agent(k));
  CHECK(n_q0(all) == 3);
}

TEST_CASE("infinite-zero orders equal the relative degree of SISO chains") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 5;
    const int rd = 1 + trial % n;
    // Controllable canonical form with numerator degree n - rd.
    Matrix a = Matrix::Zero(n, n);
    a.topRightCorner(n - 1, n - 1).setIdentity();
    for (int j = 0; j < n; ++j) a(n - 1, j) = g(rng);
    Matrix b = Matrix::Zero(n, 1);
    b(n - 1, 0) = 1.0;
    Matrix c = Matrix::Zero(1, n);
    for (int j = 0; j <= n - rd; ++j) c(0, j) = 0.5 + std::abs(g(rng));
    c(0, n - rd) = 1.0;
    const auto rep = analyze_structure(StateSpace(a, b, c));
    REQUIRE(rep.infinite_zero_orders.size() == 1);
    CHECK(rep.infinite_zero_orders[0] == rd);
  }
}

TEST_CASE("PBH tests") {
  CHECK_FALSE(is_stabilizable(mat(2, 2, {1, 0, 0, -1}), mat(2, 1, {0, 1})));
  CHECK(is_stabilizable(mat(2, 2, {-1, 0, 0, 1}), mat(2, 1, {0, 1})));
  CHECK_FALSE(is_detectable(mat(1, 2, {0, 1}), mat(2, 2, {1, 0, 0, -1})));
  CHECK(is_observable(mat(1, 2, {1, 0}), mat(2, 2, {0, 1, 0, 0})));
  CHECK_FALSE(is_observable(mat(1, 2, {0, 1}), mat(2, 2, {0, 1, 0, 0})));
}
