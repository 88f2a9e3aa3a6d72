#include <doctest.h>

#include "fixtures.hpp"
#include "synctool/numlin.hpp"
#include "synctool/protocol.hpp"

using namespace synctool;
using namespace synctool::protocol;
using fixtures::mat;

namespace {

ProtocolParams example_params() {
  GainSpec spec;
  spec.F = mat(1, 3, {30, 31, 10});
  spec.K1 = mat(1, 1, {1});
  spec.K2 = mat(2, 1, {1, 1});
  return design_gains(fixtures::example_target(), spec);
}

}  // namespace

TEST_CASE("F from chain poles has companion structure") {
  const auto t = fixtures::example_target();
  const ProtocolParams pp = design_gains(t, {{-2, 0}, {-3, 0}, {-5, 0}}, {{-1, 0}, {-2, 0}});
  CHECK(pp.F(0, 0) == 30.0);
  CHECK(pp.F(0, 1) == 31.0);
  CHECK(pp.F(0, 2) == 10.0);
  CHECK(numlin::spectra_match(numlin::eigenvalues(Matrix(t.a_bar() - t.b_bar() * pp.F)),
                              std::vector<numlin::Complex>{{-2, 0}, {-3, 0}, {-5, 0}}, 1e-6));
  CHECK(numlin::is_hurwitz(Matrix(t.a1() + t.b1() * t.gamma2() - pp.K2 * t.c1())));
  CHECK(pp.alpha >= 1.0);
  CHECK(pp.K1(0, 0) > pp.alpha / 2);
  CHECK(pp.warnings.empty());
}

TEST_CASE("explicit gains: certificate, alpha and the K1 warning") {
  const ProtocolParams pp = example_params();
  const auto t = pp.target;
  const Matrix ak = t.a1() + t.b1() * t.gamma2() - pp.K2 * t.c1();
  CHECK((ak.transpose() * pp.P + pp.P * ak + 3.0 * Matrix::Identity(2, 2)).norm() < 1e-10);
  CHECK(pp.alpha == doctest::Approx(compute_alpha(t, pp.K2, pp.P)));
  // Psi and P from the closed forms; alpha from its definition.
  const Matrix c1k2 = t.c1() * pp.K2;
  const double expected = 1.0 + 2.0 * numlin::sigma_max(c1k2) + std::pow(numlin::sigma_max(Matrix(pp.P * pp.Psi)), 2) +
                          std::pow(numlin::sigma_max(t.c1()), 2);
  CHECK(pp.alpha == doctest::Approx(expected));
  REQUIRE(pp.warnings.size() == 1);
  CHECK_NOTHROW(pp.validate());
  const Matrix k = pp.K();
  CHECK(k.rows() == 3);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(1, 0) == 1.0);
  CHECK(k(2, 0) == 1.0);
}

TEST_CASE("scaling matrices") {
  const Matrix d = build_delta(2, 3, 0.5);
  CHECK(d.rows() == 6);
  CHECK(d(0, 0) == 1.0);
  CHECK(d(2, 2) == 0.5);
  CHECK(d(5, 5) == 0.25);
  CHECK_THROWS_AS(build_delta(1, 3, 0.0), Error);
  CHECK_THROWS_AS(build_delta(1, 3, 1.5), Error);
  const ProtocolParams pp = example_params();
  const Matrix db = delta_bar(pp, 0.1);
  CHECK(db.rows() == 3);
  CHECK(db(1, 0) == doctest::Approx(-0.1));
}

TEST_CASE("observer error matrix is Hurwitz for small eps") {
  const ProtocolParams pp = example_params();
  for (double eps : {0.1, 0.05, 0.01}) CHECK(numlin::is_hurwitz(observer_error_matrix(pp, eps)));
}

TEST_CASE("protocol block shapes") {
  const ProtocolParams pp = example_params();
  const ProtocolBlock b = assemble_protocol_block(pp, 0.1, SyncMode::kOutputSync, false);
  CHECK(b.dyn.states() == 6);
  CHECK(b.dyn.inputs() == 1 + 3);
  CHECK(b.dyn.outputs() == 1 + 3);
  const ProtocolBlock r = assemble_protocol_block(pp, 0.1, SyncMode::kRegulated, true);
  CHECK(r.dyn.states() == 6);
  CHECK_NOTHROW(r.dyn.validate());
}

TEST_CASE("invalid gains are rejected") {
  GainSpec spec;
  spec.F = mat(1, 3, {-1, 0, 0});
  CHECK_THROWS_AS(design_gains(fixtures::example_target(), spec), Error);
  GainSpec asym;
  asym.K1 = mat(2, 2, {1, 2, 0, 1});
  CHECK_THROWS_AS(design_gains(homog::build_target(2, 2, Matrix::Zero(2, 4)), asym), Error);
}
