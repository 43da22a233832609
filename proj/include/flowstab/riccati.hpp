#pragma once

#include "flowstab/flow_models.hpp"

#include <Eigen/Dense>

#include <vector>

namespace flowstab {

/// Shifted extended system for the exponentially weighted LQ problem.
///
/// State w = (x, kappa) with n = n_x + n_k. The Riccati matrix A is the
/// negated dynamics minus lambda/2, so the plant is w' = -(A + lambda/2) w + B u.
struct ExtendedSystem {
  MatrixTable A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  double lambda = 0.0;
  int n_x = 0;
  int n_k = 0;

  int n() const { return n_x + n_k; }
  bool autonomous() const { return A.is_constant(); }
  /// Plant matrix -(A(t) + lambda/2 I).
  Eigen::MatrixXd dynamics(double t) const;
};

ExtendedSystem build_extended(const ReducedModel& model, double lambda);

/// x' = a x + u with weighted cost, as a one-state system whose only state
/// is the input-carrying block.
ExtendedSystem scalar_system(double a, double lambda);

/// Positive root of the shifted scalar algebraic Riccati equation.
double scalar_riccati_root(double a, double lambda);

struct RiccatiGain {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> R;
  int n_x = 0;
  int n_k = 0;
  double lambda = 0.0;

  int n() const { return n_x + n_k; }
  /// Linear interpolation; `clamped` reports evaluation outside the grid.
  Eigen::MatrixXd at(double t, bool* clamped = nullptr) const;
  /// Feedback matrix -[R21 R22] at t.
  Eigen::MatrixXd gain_matrix(double t) const;
  double max_gain_norm() const;
};

struct DreStats {
  double max_asymmetry = 0.0;     ///< max_k ||R - R^T|| / (1 + ||R||)
  double min_eigenvalue = 0.0;    ///< min over samples of the smallest eigenvalue
  double max_norm = 0.0;
  int max_newton_iterations = 0;
};

/// Backward implicit-midpoint sweep of R' = R A + A^T R + R B B R - C from
/// R(T) = terminal, storing every step.
RiccatiGain solve_dre(const ExtendedSystem& sys, double T, double dt, const Eigen::MatrixXd& terminal,
                      DreStats* stats = nullptr);
RiccatiGain solve_dre(const ExtendedSystem& sys, double T, double dt, DreStats* stats = nullptr);

/// X solving A^T X + X A = Q (complex Schur, column-wise substitution).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// kappa-rate input -R21(t) x - R22(t) kappa.
Eigen::VectorXd feedback(const RiccatiGain& gain, double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& kappa);

/// e^{lambda t} (R(t) w, w).
double value_function(const RiccatiGain& gain, double t, const Eigen::VectorXd& w);

/// Max over grid midpoints of the finite-difference Riccati residual divided by (1 + ||R||).
double riccati_residual(const ExtendedSystem& sys, const RiccatiGain& gain);

/// Relative difference of R(0) for horizons T and 2T.
double horizon_sensitivity(const ExtendedSystem& sys, double T, double dt);

}  // namespace flowstab
