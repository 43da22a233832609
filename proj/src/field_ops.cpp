#include "flowstab/field_ops.hpp"

#include "flowstab/errors.hpp"
#include "stencil.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <mutex>

namespace flowstab {

using detail::push_row;
using detail::Stencil;
using detail::Terms;
using Trip = Eigen::Triplet<double>;

struct FieldOperators::Cache {
  Eigen::SimplicialLDLT<SpMat> neumann;  // -div grad with cell 0 removed
  std::once_flag stokes_once;
  Eigen::SparseLU<SpMat> stokes;
  bool stokes_ok = false;
};

namespace {

SpMat from_triplets(int rows, int cols, const std::vector<Trip>& trips) {
  SpMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.prune(0.0);
  return m;
}

}  // namespace

FieldOperators::FieldOperators(const RectDomain& domain)
    : domain_(domain), cache_(std::make_shared<Cache>()) {
  const RectDomain& d = domain_;
  const int nx = d.nx(), ny = d.ny();
  const double hx2 = d.hx() * d.hx(), hy2 = d.hy() * d.hy();
  const int ni = d.num_interior(), ne = d.num_extended(), nb = d.num_boundary();
  const Stencil st(d);

  std::vector<Trip> trips;
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const int row = d.u_index(i, j);
      push_row(trips, row, st.u(i + 1, j), 1.0 / hx2);
      push_row(trips, row, st.u(i - 1, j), 1.0 / hx2);
      push_row(trips, row, st.u(i, j + 1), 1.0 / hy2);
      push_row(trips, row, st.u(i, j - 1), 1.0 / hy2);
      push_row(trips, row, st.u(i, j), -2.0 / hx2 - 2.0 / hy2);
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = d.v_index(i, j);
      push_row(trips, row, st.v(i + 1, j), 1.0 / hx2);
      push_row(trips, row, st.v(i - 1, j), 1.0 / hx2);
      push_row(trips, row, st.v(i, j + 1), 1.0 / hy2);
      push_row(trips, row, st.v(i, j - 1), 1.0 / hy2);
      push_row(trips, row, st.v(i, j), -2.0 / hx2 - 2.0 / hy2);
    }
  }
  lap_ = from_triplets(ni, ne, trips);
  lap_int_ = lap_.leftCols(ni);
  lap_bdry_ = lap_.rightCols(2 * nb);

  trips.clear();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = d.cell_index(i, j);
      push_row(trips, row, st.u(i + 1, j), 1.0 / d.hx());
      push_row(trips, row, st.u(i, j), -1.0 / d.hx());
      push_row(trips, row, st.v(i, j + 1), 1.0 / d.hy());
      push_row(trips, row, st.v(i, j), -1.0 / d.hy());
    }
  }
  div_ = from_triplets(d.num_cells(), ne, trips);
  div_int_ = div_.leftCols(ni);
  div_nrm_ = div_.middleCols(ni, nb);
  grad_ = SpMat(-SpMat(div_int_.transpose()));

  trips.clear();
  {
    int row = 0;
    const double sa = std::sqrt(d.cell_area());
    auto pair = [&](const Terms& a, const Terms& b, double h, double w) {
      const double c = std::sqrt(w) * sa / h;
      push_row(trips, row, a, c);
      push_row(trips, row, b, -c);
      ++row;
    };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) pair(st.u(i + 1, j), st.u(i, j), d.hx(), 1.0);
    for (int i = 1; i < nx; ++i)
      for (int j = -1; j < ny; ++j)
        pair(st.u(i, j + 1), st.u(i, j), d.hy(), (j == -1 || j + 1 == ny) ? 0.5 : 1.0);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) pair(st.v(i, j + 1), st.v(i, j), d.hy(), 1.0);
    for (int j = 1; j < ny; ++j)
      for (int i = -1; i < nx; ++i)
        pair(st.v(i + 1, j), st.v(i, j), d.hx(), (i == -1 || i + 1 == nx) ? 0.5 : 1.0);
    grad_pairs_ = from_triplets(row, ne, trips);
  }

  trips.clear();
  auto node = [&](int i, int j) { return (i <= 0 || i >= nx || j <= 0 || j >= ny) ? -1 : d.node_index(i, j); };
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const int row = d.u_index(i, j);
      if (int n = node(i, j + 1); n >= 0) trips.emplace_back(row, n, 1.0 / d.hy());
      if (int n = node(i, j); n >= 0) trips.emplace_back(row, n, -1.0 / d.hy());
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = d.v_index(i, j);
      if (int n = node(i + 1, j); n >= 0) trips.emplace_back(row, n, -1.0 / d.hx());
      if (int n = node(i, j); n >= 0) trips.emplace_back(row, n, 1.0 / d.hx());
    }
  }
  curl_ = from_triplets(ni, d.num_interior_nodes(), trips);

  const int nc = d.num_cells();
  const SpMat neg_ln = SpMat(-(div_int_ * grad_));
  const SpMat reduced = neg_ln.bottomRightCorner(nc - 1, nc - 1);
  if (nc > 1) {
    cache_->neumann.compute(reduced);
    if (cache_->neumann.info() != Eigen::Success)
      throw NumericalError("Neumann Laplacian factorization failed");
  }
}

Eigen::VectorXd FieldOperators::div(const FlowField& v) const { return div_ * v.extended(); }

Eigen::VectorXd FieldOperators::lap(const FlowField& v) const { return lap_ * v.extended(); }

Eigen::VectorXd FieldOperators::solve_neumann(const Eigen::VectorXd& rhs) const {
  const int nc = domain_.num_cells();
  if (rhs.size() != nc) throw InputError("Neumann right-hand side has wrong length");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(nc);
  if (nc == 1) return p;
  const Eigen::VectorXd r = rhs.array() - rhs.mean();
  p.tail(nc - 1) = cache_->neumann.solve(-r.tail(nc - 1));
  if (cache_->neumann.info() != Eigen::Success) throw NumericalError("Neumann solve failed");
  p.array() -= p.mean();
  return p;
}

Eigen::VectorXd FieldOperators::solve_stokes_dirichlet(const Eigen::VectorXd& normal,
                                                       const Eigen::VectorXd& tangential,
                                                       const Eigen::VectorXd& force) const {
  const RectDomain& d = domain_;
  const int ni = d.num_interior(), nc = d.num_cells(), nb = d.num_boundary();
  std::call_once(cache_->stokes_once, [&] {
    std::vector<Trip> trips;
    const SpMat a = SpMat(-lap_int_);
    for (int k = 0; k < a.outerSize(); ++k)
      for (SpMat::InnerIterator it(a, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    for (int k = 1; k < grad_.outerSize(); ++k)
      for (SpMat::InnerIterator it(grad_, k); it; ++it) {
        trips.emplace_back(it.row(), ni + k - 1, it.value());
      }
    for (int k = 0; k < div_int_.outerSize(); ++k)
      for (SpMat::InnerIterator it(div_int_, k); it; ++it) {
        if (it.row() == 0) continue;
        trips.emplace_back(ni + it.row() - 1, it.col(), it.value());
      }
    SpMat saddle(ni + nc - 1, ni + nc - 1);
    saddle.setFromTriplets(trips.begin(), trips.end());
    saddle.makeCompressed();
    cache_->stokes.compute(saddle);
    cache_->stokes_ok = cache_->stokes.info() == Eigen::Success;
  });
  if (!cache_->stokes_ok) throw NumericalError("Stokes saddle factorization failed");

  Eigen::VectorXd g(2 * nb);
  g << normal, tangential;
  Eigen::VectorXd rhs(ni + nc - 1);
  rhs.head(ni) = force + lap_bdry_ * g;
  const Eigen::VectorXd cont = -(div_nrm_ * normal);
  rhs.tail(nc - 1) = cont.tail(nc - 1);
  const Eigen::VectorXd sol = cache_->stokes.solve(rhs);
  if (cache_->stokes.info() != Eigen::Success) throw NumericalError("Stokes saddle solve failed");
  return sol.head(ni);
}

double FieldOperators::grad_norm_sq(const FlowField& v) const {
  return (grad_pairs_ * v.extended()).squaredNorm();
}

double FieldOperators::h1_norm(const FlowField& v) const {
  return std::sqrt(inner(v.interior, v.interior) + grad_norm_sq(v));
}

LerayResult leray_project(const FlowField& v, const FieldOperators& ops) {
  const RectDomain& d = ops.domain();
  if (!v.interior.allFinite() || !v.normal.allFinite() || !v.tangential.allFinite())
    throw NumericalError("non-finite field passed to the Leray projection");
  // discrete Gauss identity: cell sum of div v equals the boundary flux
  const double vol = d.cell_area() * ops.div(v).sum();
  const double flux = d.boundary_weights().dot(v.normal);
  const double scale = 1.0 + d.boundary_weights().dot(v.normal.cwiseAbs());
  if (std::abs(vol - flux) > 1e-10 * scale)
    throw NumericalError("Neumann compatibility violated: volume divergence differs from boundary flux");

  LerayResult out;
  out.pressure = ops.solve_neumann(ops.divergence_interior() * v.interior);
  out.field = FlowField::zeros(d);
  out.field.interior = v.interior - ops.gradient() * out.pressure;
  return out;
}

FlowField lift_gradient(const Eigen::VectorXd& kappa, const ControlBasis& basis,
                        const FieldOperators& ops) {
  const RectDomain& d = ops.domain();
  if (kappa.size() != 2 * basis.M) throw InputError("kappa must have 2M entries");
  if (basis.num_boundary() != d.num_boundary()) throw InputError("control basis does not match grid");
  const Eigen::VectorXd g = basis.Xi.topRows(d.num_boundary()) * (basis.Q_f * kappa);
  FlowField f = FlowField::zeros(d);
  f.normal = g;
  const Eigen::VectorXd p = ops.solve_neumann(-(ops.divergence_normal() * g));
  f.interior = ops.gradient() * p;
  return f;
}

FlowField lift_control(const Eigen::VectorXd& kappa_perp, const ControlBasis& basis,
                       const FieldOperators& ops) {
  const Eigen::VectorXd z = basis.perp_basis * kappa_perp;
  FlowField f = lift_gradient(z, basis, ops);
  f.tangential = basis.Xi.bottomRows(basis.num_boundary()) * z;
  return f;
}

FlowField lift_stokes(const Eigen::VectorXd& normal, const Eigen::VectorXd& tangential,
                      const FieldOperators& ops) {
  const RectDomain& d = ops.domain();
  const int nb = d.num_boundary();
  if (normal.size() != nb || tangential.size() != nb) throw InputError("boundary data has wrong length");
  const Eigen::VectorXd w = d.boundary_weights();
  const double flux = w.dot(normal);
  if (std::abs(flux) > 1e-10 * (1.0 + w.dot(normal.cwiseAbs())))
    throw InputError("incompatible boundary data: nonzero net flux");
  FlowField f = FlowField::zeros(d);
  f.normal = normal;
  f.tangential = tangential;
  if (normal.isZero(0.0) && tangential.isZero(0.0)) return f;
  f.interior = ops.solve_stokes_dirichlet(normal, tangential, Eigen::VectorXd::Zero(d.num_interior()));
  return f;
}

FlowField lift_stokes(const Eigen::VectorXd& trace, const FieldOperators& ops) {
  const int nb = ops.domain().num_boundary();
  if (trace.size() != 2 * nb) throw InputError("boundary data has wrong length");
  return lift_stokes(trace.head(nb), trace.tail(nb), ops);
}

StokesBasis stokes_eigenbasis(int N_gal, const FieldOperators& ops, double nu) {
  const RectDomain& d = ops.domain();
  if (N_gal < 1) throw InputError("N_gal must be positive");
  if (4 * N_gal > d.num_interior()) throw InputError("N_gal exceeds a quarter of the interior degrees of freedom");
  if (N_gal > d.num_interior_nodes()) throw InputError("N_gal exceeds the divergence-free dimension");
  if (!(nu > 0.0)) throw InputError("nu must be positive");

  const SpMat& C = ops.curl();
  const Eigen::MatrixXd K = Eigen::MatrixXd(SpMat(C.transpose() * SpMat(-ops.laplacian_interior()) * C));
  const Eigen::MatrixXd G = Eigen::MatrixXd(SpMat(C.transpose() * C));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, G);
  if (es.info() != Eigen::Success) throw NumericalError("Stokes eigensolver did not converge");

  StokesBasis B;
  B.N_gal = N_gal;
  B.nu = nu;
  B.mass_weight = d.cell_area();
  B.mu = es.eigenvalues().head(N_gal);
  B.alpha = nu * B.mu;
  const double s = 1.0 / std::sqrt(d.cell_area());
  B.E = s * (C * es.eigenvectors().leftCols(N_gal));
  // fix the sign so that the largest-magnitude entry is positive
  for (int k = 0; k < N_gal; ++k) {
    Eigen::Index imax;
    B.E.col(k).cwiseAbs().maxCoeff(&imax);
    if (B.E(imax, k) < 0.0) B.E.col(k) *= -1.0;
  }

  B.q.resize(d.num_cells(), N_gal);
  B.max_residual = 0.0;
  for (int k = 0; k < N_gal; ++k) {
    const Eigen::VectorXd e = B.E.col(k);
    const Eigen::VectorXd w = -nu * (ops.laplacian_interior() * e);
    const Eigen::VectorXd pw = ops.solve_neumann(ops.divergence_interior() * w);
    B.q.col(k) = -pw;
    const Eigen::VectorXd r = w - ops.gradient() * pw - B.alpha[k] * e;
    const double res = std::sqrt(ops.inner(r, r)) / B.alpha[k];
    B.max_residual = std::max(B.max_residual, res);
  }
  if (B.max_residual > 1e-8)
    throw NumericalError("Stokes eigenpair residual too large: " + std::to_string(B.max_residual));
  return B;
}

Eigen::VectorXd project_reduced(const FlowField& v, const StokesBasis& basis) {
  return basis.E.transpose() * (basis.mass_weight * v.interior);
}

FlowField reconstruct(const Eigen::VectorXd& x, const StokesBasis& basis, const RectDomain& domain) {
  FlowField f = FlowField::zeros(domain);
  f.interior = basis.E * x;
  return f;
}

double trace_coordinate_bound(const ControlBasis& basis, const FieldOperators& ops) {
  const int m = basis.num_normal_perp;
  if (m == 0) return 0.0;
  Eigen::MatrixXd L(ops.domain().num_interior(), m);
  for (int k = 0; k < m; ++k) L.col(k) = lift_gradient(basis.perp_basis.col(k), basis, ops).interior;
  L *= std::sqrt(ops.cell_area());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
  const double smin = svd.singularValues().minCoeff();
  if (smin <= 0.0) throw NumericalError("gradient lifting is not injective on the control range");
  return 1.0 / smin;
}

FlowField curl_of(const std::function<double(double, double)>& psi, const FieldOperators& ops) {
  const RectDomain& d = ops.domain();
  Eigen::VectorXd nodes(d.num_interior_nodes());
  for (int j = 1; j < d.ny(); ++j)
    for (int i = 1; i < d.nx(); ++i) nodes[d.node_index(i, j)] = psi(i * d.hx(), j * d.hy());
  FlowField f = FlowField::zeros(d);
  f.interior = ops.curl() * nodes;
  return f;
}

}  // namespace flowstab
