#pragma once

#include "flowstab/field.hpp"
#include "flowstab/geometry.hpp"

#include <Eigen/Dense>

#include <vector>

namespace flowstab {

/// Boundary control map Xi with its kernel and coordinate projectors.
///
/// Xi has 2*n_boundary rows (normal components of every boundary node, then
/// tangential components) and 2M columns (M normal modes, then M tangential
/// modes). Coefficients in R^{2M} are called "full" coordinates; the reduced
/// model and the feedback work in coordinates of the complement of the
/// kernel, spanned by the columns of `perp_basis`.
struct ControlBasis {
  int M = 0;
  Eigen::MatrixXd Xi;
  Eigen::VectorXd weights;  ///< boundary quadrature weights, one per node
  Eigen::VectorXd chi;
  Eigen::VectorXd chi_coeff;  ///< c_i = (pi_i, chi) / (chi, chi) over O
  double svd_tol = 1e-10;
  Eigen::VectorXd singular_values;  ///< of W^{1/2} Xi, descending
  double min_perp_singular = 0.0;   ///< smallest singular value kept on the kernel complement

  Eigen::MatrixXd ker_basis;   ///< 2M x dim(N), orthonormal
  Eigen::MatrixXd perp_basis;  ///< 2M x dim(N^perp), orthonormal, columns purely normal or tangential
  int num_normal_perp = 0;     ///< leading columns of perp_basis that are normal
  Eigen::MatrixXd P_N, P_Nperp, Q_f, Q_l;

  int num_boundary() const { return static_cast<int>(weights.size()); }
  int dim_kernel() const { return static_cast<int>(ker_basis.cols()); }
  int dim_perp() const { return static_cast<int>(perp_basis.cols()); }
  Eigen::MatrixXd normal_rows() const { return Xi.topRows(num_boundary()); }
  Eigen::MatrixXd tangential_rows() const { return Xi.bottomRows(num_boundary()); }

  /// Boundary samples (normal; tangential) of Xi applied to full coordinates.
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const { return Xi * z; }
  /// Xi applied to kernel-complement coordinates.
  Eigen::VectorXd apply_perp(const Eigen::VectorXd& kappa) const { return Xi * (perp_basis * kappa); }
  /// Weighted boundary integral of the normal component of Xi z.
  double net_flux(const Eigen::VectorXd& z) const;
};

/// Builds the basis from sampled profiles on an arbitrary 1D boundary piece.
/// Normal columns are chi * (p_i - c_i chi), tangential columns chi * t_i, both
/// restricted to the nodes flagged in `in_O`. Profiles have one row per node.
ControlBasis assemble_control_basis(const Eigen::MatrixXd& normal_profiles,
                                    const Eigen::MatrixXd& tangential_profiles,
                                    const Eigen::VectorXd& chi, const Eigen::VectorXd& weights,
                                    const std::vector<bool>& in_O, double svd_tol = 1e-10);

/// Sine modes on O times the patch cutoff, with the zero-average correction.
ControlBasis build_xi(int M, const ControlPatch& patch, const RectDomain& domain,
                      double svd_tol = 1e-10);

/// Kernel of Xi by SVD of W^{1/2} Xi (blockwise: normal and tangential
/// columns live on disjoint rows) and the projectors built from it.
void compute_nullspace(ControlBasis& basis);

struct TraceCoordinates {
  Eigen::VectorXd z;  ///< full coordinates, in P_Nperp Q_f R^{2M}
  double relative_residual = 0.0;
};

/// Coordinates z with Xi z matching the normal trace in weighted least squares.
/// Throws NumericalError("trace not in control range") when the relative
/// residual exceeds `tol`.
TraceCoordinates z_of_normal_trace(const Eigen::VectorXd& normal_trace, const ControlBasis& basis,
                                   double tol = 1e-6);
TraceCoordinates z_of_normal_trace(const FlowField& u, const ControlBasis& basis,
                                   double tol = 1e-6);

/// Max Frobenius norm of PQ - QP over P in {P_N, P_Nperp}, Q in {Q_f, Q_l}.
double commutation_defect(const ControlBasis& basis);

/// Kernel example with two linearly dependent corrected modes on O = (0, pi):
/// sigma_n(r) = sin(n r)/pi, chi = 1_(pi/3, 2pi/3) (3 sigma_3 - sigma_9),
/// normal and tangential modes {sigma_3, sigma_9}, `nodes` midpoint samples.
ControlBasis dependent_modes_fixture(int nodes = 512, double svd_tol = 1e-10);

}  // namespace flowstab
