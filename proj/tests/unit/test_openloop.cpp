#include "flowstab/errors.hpp"
#include "flowstab/openloop.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace flowstab;

TEST_CASE("time shapes") {
  TimeShaping sh;
  CHECK(sh.phi_flat(0.0) == 1.0);
  CHECK(sh.phi_flat(0.05) == 1.0);
  CHECK(sh.phi_flat(1.0) == 0.0);
  CHECK(sh.phi_flat(0.5) == doctest::Approx(0.5));
  const double h = 1e-6;
  for (double t : {0.1, 0.3, 0.62, 0.9}) {
    CHECK(sh.phi_flat_d(t) == doctest::Approx((sh.phi_flat(t + h) - sh.phi_flat(t - h)) / (2 * h)).epsilon(1e-5));
    CHECK(sh.phi_d(t) == doctest::Approx((sh.phi(t + h) - sh.phi(t - h)) / (2 * h)).epsilon(1e-5));
  }
  // phi lives strictly inside the collars, where phi_tilde is bounded below
  CHECK(sh.phi(sh.delta + 1e-3) == 0.0);
  CHECK(sh.phi(1.0 - sh.delta - 1e-3) == 0.0);
  CHECK(sh.phi(0.5) == doctest::Approx(1.0));
  CHECK(sh.phi_tilde_floor() > 0.0);
  for (double t = sh.inner_delta(); t <= 1.0 - sh.inner_delta(); t += 0.01)
    CHECK(sh.phi_tilde(t) >= sh.phi_tilde_floor() - 1e-12);

  // sigma_m are orthonormal on (0,1)
  const int q = 4000;
  for (int m = 1; m <= 3; ++m)
    for (int k = 1; k <= 3; ++k) {
      double s = 0.0;
      for (int i = 0; i < q; ++i) {
        const double t = (i + 0.5) / q;
        s += TimeShaping::sigma(m, t) * TimeShaping::sigma(k, t) / q;
      }
      CHECK(s == doctest::Approx(m == k ? 1.0 : 0.0).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("flattening the initial trace") {
  const auto& p = fixtures::small_plant();
  TimeShaping sh;
  const int m = p.basis.dim_perp();
  const FlowField zero = FlowField::zeros(p.ops->domain());
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(p.model.N_gal);
  const FlattenResult z = flatten_initial(p.model, p.basis, zero, x0, Eigen::VectorXd::Zero(8), sh, 5e-3);
  CHECK(z.kappa_start.norm() == 0.0);
  CHECK(z.x_end.norm() == 0.0);

  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(8, 0);
  const FlowField v0 = lift_control(p.basis.perp_basis.transpose() * e1, p.basis, *p.ops);
  const FlattenResult r = flatten_initial(p.model, p.basis, v0, project_reduced(v0, p.stokes),
                                          Eigen::VectorXd::Zero(8), sh, 5e-3);
  CHECK((r.z_full - p.basis.P_Nperp * p.basis.Q_f * e1).norm() < 1e-10);
  CHECK(r.kappa_start.size() == m);
  CHECK(r.terminal_trace_sup == 0.0);
}

TEST_CASE("driving the leading modes to zero") {
  const auto& p = fixtures::small_plant();
  TimeShaping sh;
  const int N = p.model.N_gal;
  const DriveResult zero = drive_PiN_to_zero(p.model, p.basis, Eigen::VectorXd::Zero(N), 1.0, 4, sh, 5e-3);
  CHECK(zero.coeff.norm() == 0.0);
  CHECK(zero.x_end.norm() == 0.0);

  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(N, 1.0, -0.5);
  ResponseCache cache;
  const DriveResult d = drive_PiN_to_zero(p.model, p.basis, x, 1.0, 6, sh, 5e-3, &cache);
  CHECK(cache.valid);
  CHECK(d.rank == 6);
  CHECK(d.post_residual < 1e-8);
  CHECK(d.x_end.head(6).norm() < 1e-8 * x.norm());
  // second call reuses the cached response and gives the same answer
  const DriveResult again = drive_PiN_to_zero(p.model, p.basis, x, 2.0, 6, sh, 5e-3, &cache);
  CHECK((again.coeff - d.coeff).norm() < 1e-12 * d.coeff.norm());

  // two control directions and one time mode cannot steer four modes
  ReducedModel few = p.model;
  for (auto& a : few.A_xk.values) a = a.leftCols(2).eval();
  few.n_perp = 2;
  ControlBasis narrow = p.basis;
  narrow.perp_basis = p.basis.perp_basis.leftCols(2);
  TimeShaping one;
  one.M_t = 1;
  CHECK_THROWS_WITH_AS(drive_PiN_to_zero(few, narrow, x, 1.0, 4, one, 5e-3),
                       "insufficient controls: increase M or M_t", NumericalError);
}

TEST_CASE("concatenated open loop") {
  const auto& p = fixtures::small_plant();
  TimeShaping sh;
  const FlowField zero = FlowField::zeros(p.ops->domain());
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(p.model.N_gal);
  const OpenLoopResult z = concatenate(p.model, p.basis, zero, x0, Eigen::VectorXd::Zero(8), 3, 4, sh, 5e-3, 0.5);
  for (const auto& x : z.run.x) CHECK(x.norm() == 0.0);
  CHECK(z.control_energy == 0.0);

  const InitialState s = p.initial_state(1.0, 7);
  const Eigen::VectorXd tau = p.basis.Q_l * (p.basis.perp_basis * s.kappa0);
  const OpenLoopResult r = concatenate(p.model, p.basis, s.v0, s.x0, tau, 3, p.model.N_gal, sh, 5e-3, 0.5);
  CHECK(r.intervals.size() == 3);
  CHECK(r.max_rho < 1e-6);
  CHECK(r.run.t.back() == doctest::Approx(3.0));
  CHECK(r.control_energy > 0.0);
}
