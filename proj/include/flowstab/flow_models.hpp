#pragma once

#include "flowstab/control_basis.hpp"
#include "flowstab/field_ops.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace flowstab {

/// Reference flow u_hat(t): zero, a time-periodic multiple of a fixed
/// divergence-free cellular field, or a sampled table.
class ReferenceTrajectory {
 public:
  enum class Kind { Zero, Periodic, Table };

  static ReferenceTrajectory zero(const FieldOperators& ops);
  /// a(t) curl(psi), psi = sin^2(pi x/Lx) sin^2(pi y/Ly), a(t) = a0 (1 + 0.5 sin(omega t)).
  static ReferenceTrajectory periodic(const FieldOperators& ops, double a0, double omega);
  /// CSV rows: t, all u faces row-major ((nx+1) per row, ny rows), then all v faces
  /// (nx per row, ny+1 rows). Wall faces must vanish.
  static ReferenceTrajectory from_csv(const std::string& path, const FieldOperators& ops);
  static ReferenceTrajectory from_samples(const FieldOperators& ops, std::vector<double> times,
                                          std::vector<Eigen::VectorXd> interior);

  Kind kind() const { return kind_; }
  bool autonomous() const { return kind_ == Kind::Zero || (kind_ == Kind::Table && times_.size() == 1); }
  FlowField at(double t) const;
  /// Scalar amplitude a(t) for the periodic reference (1 otherwise).
  double amplitude(double t) const;
  /// Fixed shape multiplied by amplitude(t) (periodic), or zero.
  const FlowField& shape() const { return shape_; }

  /// Sampled sup norm of u_hat and of its time derivative on [0, T].
  double sup_norm(double T, double dt = 0.05) const;
  double sup_time_derivative(double T, double dt = 0.05) const;

  double a0() const { return a0_; }
  double omega() const { return omega_; }

 private:
  Kind kind_ = Kind::Zero;
  RectDomain domain_{1.0, 1.0, 1, 1};
  FlowField shape_;
  double a0_ = 0.0, omega_ = 0.0;
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> samples_;
};

/// Central advective operator (w . grad) acting on extended vectors.
SpMat advection_matrix(const FlowField& w, const FieldOperators& ops);
/// Energy-neutral form: skew part of the interior block plus the boundary block.
SpMat skew_advection_matrix(const FlowField& w, const FieldOperators& ops);
/// Reaction term (v . grad) u_hat as a matrix in v.
SpMat reaction_matrix(const FlowField& uhat, const FieldOperators& ops);
/// B(u_hat) v = (u_hat . grad) v + (v . grad) u_hat.
SpMat oseen_convection(const FlowField& uhat, const FieldOperators& ops);

/// N(v) = (v . grad) v in skew form, interior faces.
Eigen::VectorXd convection_nonlinear(const FlowField& v, const FieldOperators& ops);

/// Full-order Oseen operator around a reference trajectory.
class OseenOperator {
 public:
  OseenOperator(const FieldOperators& ops, ReferenceTrajectory ref, double nu);

  const FieldOperators& ops() const { return *ops_; }
  const ReferenceTrajectory& reference() const { return ref_; }
  double nu() const { return nu_; }

  /// B(u_hat(t)), n_interior x n_extended.
  SpMat convection(double t) const;
  /// nu lap v - B v on interior faces (no projection).
  Eigen::VectorXd drift(double t, const FlowField& v) const;
  /// Pi(-nu lap v + B v) with the boundary data carried by v.
  FlowField apply(double t, const FlowField& v) const;

 private:
  const FieldOperators* ops_;
  ReferenceTrajectory ref_;
  double nu_;
  SpMat shape_conv_;
};

/// Piecewise-linear matrix function of time. A single sample means constant.
struct MatrixTable {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> values;

  bool is_constant() const { return values.size() == 1; }
  Eigen::MatrixXd at(double t) const;
};

/// Extended linear model in reduced coordinates: x' = A_xx x + A_xk kappa,
/// kappa' = input.
struct ReducedModel {
  int N_gal = 0;
  int M = 0;
  int n_perp = 0;
  double nu = 0.0;
  MatrixTable A_xx;
  MatrixTable A_xk;
  Eigen::VectorXd mu;  ///< ||grad e_i||^2, for H1 norms of reduced states
};

/// Columns: extended vectors of lift_control for each kernel-complement direction.
Eigen::MatrixXd control_lift_matrix(const ControlBasis& basis, const FieldOperators& ops);

ReducedModel assemble_reduced(const OseenOperator& oseen, const StokesBasis& stokes,
                              const ControlBasis& basis, double T, double dt_A = 0.05);

}  // namespace flowstab
