#pragma once

#include "flowstab/control_basis.hpp"
#include "flowstab/field.hpp"
#include "flowstab/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <memory>

namespace flowstab {

using SpMat = Eigen::SparseMatrix<double>;

/// Discrete calculus on the staggered grid.
///
/// Operators acting on velocities take extended vectors [interior; normal;
/// tangential] and return interior-face (or cell) values. The gradient maps
/// cell values to interior faces and equals minus the transpose of the
/// interior divergence, which gives exact discrete integration by parts.
class FieldOperators {
 public:
  explicit FieldOperators(const RectDomain& domain);

  const RectDomain& domain() const { return domain_; }
  double cell_area() const { return domain_.cell_area(); }

  /// Vector Laplacian, n_interior x n_extended.
  const SpMat& laplacian() const { return lap_; }
  /// Block acting on interior unknowns (symmetric, negative definite).
  const SpMat& laplacian_interior() const { return lap_int_; }
  /// Block acting on boundary data [normal; tangential].
  const SpMat& laplacian_boundary() const { return lap_bdry_; }

  /// Cell divergence, n_cells x n_extended.
  const SpMat& divergence() const { return div_; }
  const SpMat& divergence_interior() const { return div_int_; }
  /// Block acting on the normal trace only, n_cells x n_boundary.
  const SpMat& divergence_normal() const { return div_nrm_; }
  /// Cell-to-face gradient, n_interior x n_cells.
  const SpMat& gradient() const { return grad_; }

  Eigen::VectorXd div(const FlowField& v) const;
  Eigen::VectorXd lap(const FlowField& v) const;

  /// Solves div_int grad p = rhs with zero-mean normalization. The mean of
  /// the right-hand side is removed first.
  Eigen::VectorXd solve_neumann(const Eigen::VectorXd& rhs) const;

  /// Stokes saddle solve with Dirichlet data: -lap v + grad p = f, div v = 0.
  /// Returns the interior velocity; ν does not enter.
  Eigen::VectorXd solve_stokes_dirichlet(const Eigen::VectorXd& normal,
                                         const Eigen::VectorXd& tangential,
                                         const Eigen::VectorXd& force) const;

  /// (a, b) over interior faces with the cell-area weight.
  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return cell_area() * a.dot(b);
  }
  double l2_norm(const FlowField& v) const { return std::sqrt(inner(v.interior, v.interior)); }
  /// Sum of squared difference quotients over all neighbouring face pairs,
  /// wall pairs weighted 1/2. Equals -(v, lap v) for zero trace.
  double grad_norm_sq(const FlowField& v) const;
  /// Weighted difference quotients; grad_norm_sq(v) = ||pairs * ext||^2.
  const SpMat& gradient_pairs() const { return grad_pairs_; }
  /// sqrt(||v||^2 + ||grad v||^2).
  double h1_norm(const FlowField& v) const;

  /// Discrete curl of node values (zero on boundary nodes) to interior faces.
  const SpMat& curl() const { return curl_; }

 private:
  struct Cache;

  RectDomain domain_;
  SpMat lap_, lap_int_, lap_bdry_;
  SpMat div_, div_int_, div_nrm_;
  SpMat grad_;
  SpMat curl_;
  SpMat grad_pairs_;
  std::shared_ptr<Cache> cache_;
};

struct LerayResult {
  FlowField field;           ///< Pi v, zero trace
  Eigen::VectorXd pressure;  ///< p with v = Pi v + grad p, zero mean
};

LerayResult leray_project(const FlowField& v, const FieldOperators& ops);

/// Gradient of the harmonic Neumann solution with normal data n . Xi Q_f kappa
/// (kappa in full coordinates). The tangential trace is left at zero.
FlowField lift_gradient(const Eigen::VectorXd& kappa, const ControlBasis& basis,
                        const FieldOperators& ops);

/// Lifting used for control directions in kernel-complement coordinates:
/// the gradient lifting plus the full tangential trace of Xi kappa.
FlowField lift_control(const Eigen::VectorXd& kappa_perp, const ControlBasis& basis,
                       const FieldOperators& ops);

/// Divergence-free Stokes extension of boundary data g (normal; tangential).
FlowField lift_stokes(const Eigen::VectorXd& normal, const Eigen::VectorXd& tangential,
                      const FieldOperators& ops);
FlowField lift_stokes(const Eigen::VectorXd& trace, const FieldOperators& ops);

struct StokesBasis {
  int N_gal = 0;
  double nu = 0.0;
  Eigen::MatrixXd E;         ///< n_interior x N_gal
  Eigen::VectorXd alpha;     ///< nu * mu
  Eigen::VectorXd mu;        ///< eigenvalues of -Pi lap, i.e. ||grad e_i||^2
  Eigen::MatrixXd q;         ///< paired pressures, n_cells x N_gal
  double mass_weight = 0.0;  ///< interior mass matrix is mass_weight * I
  double max_residual = 0.0; ///< max_i ||L e_i - alpha_i e_i|| / alpha_i
};

/// Leading eigenpairs of L = -nu Pi lap on discretely divergence-free fields
/// with zero trace, computed densely in streamfunction coordinates.
StokesBasis stokes_eigenbasis(int N_gal, const FieldOperators& ops, double nu);

/// x = E^T Mass v_int. E is mass-orthogonal to every discrete gradient, so
/// this equals E^T Mass (Pi v).
Eigen::VectorXd project_reduced(const FlowField& v, const StokesBasis& basis);
FlowField reconstruct(const Eigen::VectorXd& x, const StokesBasis& basis, const RectDomain& domain);

/// Largest ratio ||z|| / ||lift_gradient(z)|| over normal kernel-complement
/// directions: the constant C in ||z^{u.n}|| <= C ||u||.
double trace_coordinate_bound(const ControlBasis& basis, const FieldOperators& ops);

/// Samples psi(x,y) at interior nodes and returns its discrete curl.
FlowField curl_of(const std::function<double(double, double)>& psi, const FieldOperators& ops);

}  // namespace flowstab
