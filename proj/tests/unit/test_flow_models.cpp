#include "flowstab/errors.hpp"
#include "flowstab/flow_models.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace flowstab;

namespace {

struct Small {
  RectDomain d{1.0, 1.0, 16, 16};
  FieldOperators ops{d};
  ControlBasis basis = build_xi(4, build_cutoff(PatchParams{}, d), d);
  StokesBasis stokes = stokes_eigenbasis(6, ops, 0.03);
};

}  // namespace

TEST_CASE("zero reference: Oseen operator acts as the Stokes operator") {
  Small s;
  const OseenOperator os(s.ops, ReferenceTrajectory::zero(s.ops), 0.03);
  for (int i = 0; i < 6; ++i) {
    FlowField e = FlowField::zeros(s.d);
    e.interior = s.stokes.E.col(i);
    const FlowField r = os.apply(0.0, e);
    CHECK((r.interior - s.stokes.alpha[i] * e.interior).norm() < 1e-8 * s.stokes.alpha[i] * e.interior.norm());
  }
  CHECK(os.apply(0.0, FlowField::zeros(s.d)).interior.norm() == 0.0);
}

TEST_CASE("periodic reference is solenoidal with zero trace") {
  Small s;
  const ReferenceTrajectory ref = ReferenceTrajectory::periodic(s.ops, 0.5, 2.0);
  CHECK_FALSE(ref.autonomous());
  CHECK(ref.shape().has_zero_trace());
  CHECK(s.ops.div(ref.shape()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ref.amplitude(0.3) == doctest::Approx(0.5 * (1 + 0.5 * std::sin(0.6))));
  CHECK((ref.at(0.3).interior - ref.amplitude(0.3) * ref.shape().interior).norm() < 1e-15);
}

TEST_CASE("skew convection conserves energy for zero trace") {
  Small s;
  const ReferenceTrajectory ref = ReferenceTrajectory::periodic(s.ops, 1.0, 0.0);
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  FlowField v = FlowField::zeros(s.d);
  for (int i = 0; i < v.interior.size(); ++i) v.interior[i] = g(rng);
  const SpMat A = skew_advection_matrix(ref.shape(), s.ops);
  CHECK(std::abs(v.interior.dot(A * v.extended())) < 1e-12 * v.interior.squaredNorm());
  CHECK(convection_nonlinear(FlowField::zeros(s.d), s.ops).norm() == 0.0);
  // N(v) is quadratic
  const Eigen::VectorXd n1 = convection_nonlinear(v, s.ops);
  CHECK((convection_nonlinear(2.0 * v, s.ops) - 4.0 * n1).norm() < 1e-12 * n1.norm());
}

TEST_CASE("linearized convection is the derivative of the nonlinear term") {
  Small s;
  const ReferenceTrajectory ref = ReferenceTrajectory::periodic(s.ops, 1.0, 0.0);
  const FlowField u = ref.shape();
  FlowField v = FlowField::zeros(s.d);
  v.interior = s.stokes.E.col(1);
  const double eps = 1e-6;
  // for the advective form, d/de (u+ev).grad(u+ev) = B(u) v
  const Eigen::VectorXd fd =
      (advection_matrix(u + eps * v, s.ops) * (u + eps * v).extended() -
       advection_matrix(u - eps * v, s.ops) * (u - eps * v).extended()) /
      (2 * eps);
  const Eigen::VectorXd lin = advection_matrix(u, s.ops) * v.extended() + reaction_matrix(u, s.ops) * v.extended();
  CHECK((fd - lin).norm() < 1e-6 * lin.norm());
}

TEST_CASE("reduced model for the zero reference") {
  Small s;
  const OseenOperator os(s.ops, ReferenceTrajectory::zero(s.ops), 0.03);
  const ReducedModel m = assemble_reduced(os, s.stokes, s.basis, 4.0);
  REQUIRE(m.A_xx.is_constant());
  const Eigen::MatrixXd diag = s.stokes.alpha.asDiagonal();
  CHECK((m.A_xx.at(1.0) + diag).norm() < 1e-9 * diag.norm());
  CHECK(m.A_xk.at(0.0).rows() == 6);
  CHECK(m.A_xk.at(0.0).cols() == s.basis.dim_perp());
  CHECK(m.A_xk.at(0.0).allFinite());
}

TEST_CASE("reduced model table for a periodic reference") {
  Small s;
  const OseenOperator os(s.ops, ReferenceTrajectory::periodic(s.ops, 0.5, 1.0), 0.03);
  const ReducedModel m = assemble_reduced(os, s.stokes, s.basis, 1.0, 0.25);
  REQUIRE(m.A_xx.times.size() == 5);
  // linear interpolation between samples
  const Eigen::MatrixXd mid = m.A_xx.at(0.125);
  CHECK((mid - 0.5 * (m.A_xx.values[0] + m.A_xx.values[1])).norm() < 1e-12 * mid.norm());
}

TEST_CASE("matrix table interpolation") {
  MatrixTable t;
  t.times = {0.0, 1.0, 2.0};
  t.values = {Eigen::MatrixXd::Constant(1, 1, 0.0), Eigen::MatrixXd::Constant(1, 1, 2.0),
              Eigen::MatrixXd::Constant(1, 1, 6.0)};
  CHECK(t.at(0.5)(0, 0) == doctest::Approx(1.0));
  CHECK(t.at(1.5)(0, 0) == doctest::Approx(4.0));
  CHECK(t.at(5.0)(0, 0) == doctest::Approx(6.0));
}
