#include "flowstab/control_basis.hpp"

#include "flowstab/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace flowstab {

double ControlBasis::net_flux(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd g = Xi.topRows(num_boundary()) * z;
  return weights.dot(g);
}

ControlBasis assemble_control_basis(const Eigen::MatrixXd& normal_profiles,
                                    const Eigen::MatrixXd& tangential_profiles,
                                    const Eigen::VectorXd& chi, const Eigen::VectorXd& weights,
                                    const std::vector<bool>& in_O, double svd_tol) {
  const int nb = static_cast<int>(weights.size());
  const int M = static_cast<int>(normal_profiles.cols());
  if (M < 1) throw InputError("control basis needs at least one mode");
  if (tangential_profiles.cols() != M || normal_profiles.rows() != nb ||
      tangential_profiles.rows() != nb || chi.size() != nb || static_cast<int>(in_O.size()) != nb) {
    throw InputError("control basis profile dimensions do not match the boundary");
  }

  ControlBasis basis;
  basis.M = M;
  basis.weights = weights;
  basis.svd_tol = svd_tol;
  basis.chi = chi;
  basis.Xi = Eigen::MatrixXd::Zero(2 * nb, 2 * M);
  basis.chi_coeff = Eigen::VectorXd::Zero(M);

  Eigen::VectorXd chi_O = Eigen::VectorXd::Zero(nb);
  for (int b = 0; b < nb; ++b)
    if (in_O[b]) chi_O[b] = chi[b];
  const double chi_sq = chi_O.cwiseProduct(chi_O).dot(weights);

  for (int i = 0; i < M; ++i) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(nb);
    Eigen::VectorXd t = Eigen::VectorXd::Zero(nb);
    for (int b = 0; b < nb; ++b) {
      if (!in_O[b]) continue;
      p[b] = normal_profiles(b, i);
      t[b] = tangential_profiles(b, i);
    }
    const double c = chi_sq > 0.0 ? p.cwiseProduct(chi_O).dot(weights) / chi_sq : 0.0;
    basis.chi_coeff[i] = c;
    basis.Xi.col(i).head(nb) = chi_O.cwiseProduct(p - c * chi_O);
    basis.Xi.col(M + i).tail(nb) = chi_O.cwiseProduct(t);
  }
  compute_nullspace(basis);
  return basis;
}

ControlBasis build_xi(int M, const ControlPatch& patch, const RectDomain& domain, double svd_tol) {
  if (M < 1) throw InputError("M must be at least 1");
  const int nb = domain.num_boundary();
  if (2 * M > nb) throw InputError("2M exceeds the number of boundary nodes");
  const double len_O = patch.length_O();
  const double h = domain.wall_spacing(patch.params.wall);
  if (2.0 * len_O / (M * h) < 4.0) throw InputError("under-resolved boundary mode");

  Eigen::MatrixXd prof = Eigen::MatrixXd::Zero(nb, M);
  const double scale = std::sqrt(2.0 / len_O);
  for (int b = 0; b < nb; ++b) {
    if (!patch.in_O[b]) continue;
    const double r = domain.boundary()[b].r;
    for (int i = 0; i < M; ++i)
      prof(b, i) = scale * std::sin((i + 1) * std::numbers::pi * (r - patch.params.a_O) / len_O);
  }
  return assemble_control_basis(prof, prof, patch.chi, domain.boundary_weights(), patch.in_O,
                                svd_tol);
}

void compute_nullspace(ControlBasis& basis) {
  const int nb = basis.num_boundary();
  const int M = basis.M;
  const Eigen::VectorXd sw = basis.weights.cwiseSqrt();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd_n(sw.asDiagonal() * basis.Xi.block(0, 0, nb, M),
                                          Eigen::ComputeFullV);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_t(sw.asDiagonal() * basis.Xi.block(nb, M, nb, M),
                                          Eigen::ComputeFullV);

  std::vector<double> all;
  auto collect = [&all](const Eigen::VectorXd& s, int count) {
    for (int k = 0; k < count; ++k) all.push_back(k < s.size() ? s[k] : 0.0);
  };
  collect(svd_n.singularValues(), M);
  collect(svd_t.singularValues(), M);
  std::sort(all.begin(), all.end(), std::greater<>());
  basis.singular_values = Eigen::Map<Eigen::VectorXd>(all.data(), static_cast<int>(all.size()));
  const double smax = all.empty() ? 0.0 : all.front();
  const double tol = basis.svd_tol * smax;

  std::vector<Eigen::VectorXd> ker, perp_n, perp_t;
  double min_kept = smax;
  auto split = [&](const Eigen::JacobiSVD<Eigen::MatrixXd>& svd, int offset,
                   std::vector<Eigen::VectorXd>& perp) {
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::MatrixXd& V = svd.matrixV();
    std::vector<Eigen::VectorXd> block_perp;
    bool any_kernel = false;
    for (int k = 0; k < M; ++k) {
      const double sk = k < s.size() ? s[k] : 0.0;
      Eigen::VectorXd col = Eigen::VectorXd::Zero(2 * M);
      col.segment(offset, M) = V.col(k);
      if (smax > 0.0 && sk > tol) {
        block_perp.push_back(col);
        min_kept = std::min(min_kept, sk);
      } else {
        ker.push_back(col);
        any_kernel = true;
      }
    }
    if (!any_kernel) {
      // full rank block: keep plain mode coordinates
      for (int k = 0; k < M; ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(2 * M);
        e[offset + k] = 1.0;
        perp.push_back(e);
      }
    } else {
      perp = std::move(block_perp);
    }
  };
  split(svd_n, 0, perp_n);
  split(svd_t, M, perp_t);

  basis.ker_basis.resize(2 * M, static_cast<int>(ker.size()));
  for (size_t k = 0; k < ker.size(); ++k) basis.ker_basis.col(static_cast<int>(k)) = ker[k];
  basis.num_normal_perp = static_cast<int>(perp_n.size());
  basis.perp_basis.resize(2 * M, static_cast<int>(perp_n.size() + perp_t.size()));
  int c = 0;
  for (const auto& v : perp_n) basis.perp_basis.col(c++) = v;
  for (const auto& v : perp_t) basis.perp_basis.col(c++) = v;
  basis.min_perp_singular = basis.dim_perp() > 0 ? min_kept : 0.0;

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2 * M, 2 * M);
  basis.P_N = basis.ker_basis * basis.ker_basis.transpose();
  basis.P_Nperp = I - basis.P_N;
  basis.Q_f = Eigen::MatrixXd::Zero(2 * M, 2 * M);
  basis.Q_f.topLeftCorner(M, M).setIdentity();
  basis.Q_l = I - basis.Q_f;
}

TraceCoordinates z_of_normal_trace(const Eigen::VectorXd& normal_trace, const ControlBasis& basis,
                                   double tol) {
  const int nb = basis.num_boundary();
  const int M = basis.M;
  if (normal_trace.size() != nb) throw InputError("normal trace has wrong length");
  TraceCoordinates out;
  out.z = Eigen::VectorXd::Zero(2 * M);
  const Eigen::VectorXd sw = basis.weights.cwiseSqrt();
  const double gnorm = sw.cwiseProduct(normal_trace).norm();
  if (gnorm == 0.0) return out;

  const Eigen::MatrixXd A = sw.asDiagonal() * basis.Xi.block(0, 0, nb, M);
  const Eigen::VectorXd rhs = sw.cwiseProduct(normal_trace);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(basis.svd_tol);
  const Eigen::VectorXd zf = cod.solve(rhs);
  out.relative_residual = (A * zf - rhs).norm() / gnorm;
  if (out.relative_residual > tol) throw NumericalError("trace not in control range");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * M);
  full.head(M) = zf;
  out.z = basis.P_Nperp * (basis.Q_f * full);
  return out;
}

TraceCoordinates z_of_normal_trace(const FlowField& u, const ControlBasis& basis, double tol) {
  return z_of_normal_trace(u.normal, basis, tol);
}

double commutation_defect(const ControlBasis& basis) {
  double worst = 0.0;
  for (const Eigen::MatrixXd* P : {&basis.P_N, &basis.P_Nperp})
    for (const Eigen::MatrixXd* Q : {&basis.Q_f, &basis.Q_l})
      worst = std::max(worst, ((*P) * (*Q) - (*Q) * (*P)).norm());
  return worst;
}

ControlBasis dependent_modes_fixture(int nodes, double svd_tol) {
  if (nodes < 8) throw InputError("fixture needs at least 8 nodes");
  const double pi = std::numbers::pi;
  const double h = pi / nodes;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(nodes, h);
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(nodes);
  Eigen::MatrixXd prof(nodes, 2);
  std::vector<bool> in_O(nodes, true);
  auto sigma = [pi](int n, double r) { return std::sin(n * r) / pi; };
  for (int k = 0; k < nodes; ++k) {
    const double r = (k + 0.5) * h;
    prof(k, 0) = sigma(3, r);
    prof(k, 1) = sigma(9, r);
    if (r > pi / 3.0 && r < 2.0 * pi / 3.0) chi[k] = 3.0 * sigma(3, r) - sigma(9, r);
  }
  return assemble_control_basis(prof, prof, chi, w, in_O, svd_tol);
}

}  // namespace flowstab
