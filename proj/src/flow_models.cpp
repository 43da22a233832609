#include "flowstab/flow_models.hpp"

#include "flowstab/errors.hpp"
#include "stencil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace flowstab {

using detail::push_row;
using detail::Stencil;
using detail::Terms;
using Trip = Eigen::Triplet<double>;

namespace {

void check_reference_field(const FlowField& f, const FieldOperators& ops, const std::string& what) {
  if (!f.has_zero_trace(1e-9)) throw InputError(what + ": reference must vanish on the boundary");
  const double div = ops.div(f).cwiseAbs().maxCoeff();
  const double scale = 1.0 + f.interior.cwiseAbs().maxCoeff() / std::min(ops.domain().hx(), ops.domain().hy());
  if (div > 1e-9 * scale) throw InputError(what + ": reference is not discretely divergence-free");
}

}  // namespace

ReferenceTrajectory ReferenceTrajectory::zero(const FieldOperators& ops) {
  ReferenceTrajectory r;
  r.kind_ = Kind::Zero;
  r.domain_ = ops.domain();
  r.shape_ = FlowField::zeros(ops.domain());
  return r;
}

ReferenceTrajectory ReferenceTrajectory::periodic(const FieldOperators& ops, double a0, double omega) {
  ReferenceTrajectory r;
  r.kind_ = Kind::Periodic;
  r.domain_ = ops.domain();
  r.a0_ = a0;
  r.omega_ = omega;
  const double Lx = ops.domain().Lx(), Ly = ops.domain().Ly();
  const double pi = std::numbers::pi;
  r.shape_ = curl_of(
      [=](double x, double y) {
        const double sx = std::sin(pi * x / Lx), sy = std::sin(pi * y / Ly);
        return sx * sx * sy * sy;
      },
      ops);
  return r;
}

ReferenceTrajectory ReferenceTrajectory::from_samples(const FieldOperators& ops, std::vector<double> times,
                                                      std::vector<Eigen::VectorXd> interior) {
  if (times.empty() || times.size() != interior.size())
    throw InputError("reference table needs matching, nonempty time and field samples");
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw InputError("reference table times must increase");
  ReferenceTrajectory r;
  r.kind_ = Kind::Table;
  r.domain_ = ops.domain();
  r.shape_ = FlowField::zeros(ops.domain());
  for (size_t k = 0; k < times.size(); ++k) {
    if (interior[k].size() != ops.domain().num_interior()) throw InputError("reference sample has wrong size");
    FlowField f = FlowField::zeros(ops.domain());
    f.interior = interior[k];
    check_reference_field(f, ops, "reference sample at t=" + std::to_string(times[k]));
  }
  r.times_ = std::move(times);
  r.samples_ = std::move(interior);
  return r;
}

ReferenceTrajectory ReferenceTrajectory::from_csv(const std::string& path, const FieldOperators& ops) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open reference table '" + path + "'");
  const RectDomain& d = ops.domain();
  const int nx = d.nx(), ny = d.ny();
  const int ncols = 1 + d.num_u_faces() + d.num_v_faces();
  std::vector<double> times;
  std::vector<Eigen::VectorXd> fields;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(vals.size()) != ncols)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(ncols) +
                       " columns, got " + std::to_string(vals.size()));
    Eigen::VectorXd f(d.num_interior());
    double wall = 0.0;
    int c = 1;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i <= nx; ++i, ++c) {
        if (i == 0 || i == nx) wall = std::max(wall, std::abs(vals[c]));
        else f[d.u_index(i, j)] = vals[c];
      }
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i < nx; ++i, ++c) {
        if (j == 0 || j == ny) wall = std::max(wall, std::abs(vals[c]));
        else f[d.v_index(i, j)] = vals[c];
      }
    if (wall > 1e-9) throw InputError(path + ":" + std::to_string(lineno) + ": wall faces must be zero");
    times.push_back(vals[0]);
    fields.push_back(f);
  }
  return from_samples(ops, std::move(times), std::move(fields));
}

double ReferenceTrajectory::amplitude(double t) const {
  if (kind_ == Kind::Periodic) return a0_ * (1.0 + 0.5 * std::sin(omega_ * t));
  return 1.0;
}

FlowField ReferenceTrajectory::at(double t) const {
  switch (kind_) {
    case Kind::Zero: return shape_;
    case Kind::Periodic: return amplitude(t) * shape_;
    case Kind::Table: break;
  }
  FlowField f = FlowField::zeros(domain_);
  if (t <= times_.front()) {
    f.interior = samples_.front();
  } else if (t >= times_.back()) {
    f.interior = samples_.back();
  } else {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const size_t k = static_cast<size_t>(it - times_.begin());
    const double s = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    f.interior = (1.0 - s) * samples_[k - 1] + s * samples_[k];
  }
  return f;
}

double ReferenceTrajectory::sup_norm(double T, double dt) const {
  double m = 0.0;
  for (double t = 0.0; t <= T + 1e-12; t += dt) {
    const FlowField f = at(t);
    if (f.interior.size() > 0) m = std::max(m, f.interior.cwiseAbs().maxCoeff());
  }
  return m;
}

double ReferenceTrajectory::sup_time_derivative(double T, double dt) const {
  double m = 0.0;
  for (double t = 0.0; t + dt <= T + 1e-12; t += dt) {
    const Eigen::VectorXd d = (at(t + dt).interior - at(t).interior) / dt;
    if (d.size() > 0) m = std::max(m, d.cwiseAbs().maxCoeff());
  }
  return m;
}

SpMat advection_matrix(const FlowField& w, const FieldOperators& ops) {
  const RectDomain& d = ops.domain();
  const int nx = d.nx(), ny = d.ny();
  const Stencil st(d);
  std::vector<Trip> trips;
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const int row = d.u_index(i, j);
      const double wx = w.u(d, i, j);
      const double wy = 0.25 * (w.v(d, i - 1, j) + w.v(d, i, j) + w.v(d, i - 1, j + 1) + w.v(d, i, j + 1));
      if (wx != 0.0) {
        push_row(trips, row, st.u(i + 1, j), wx / (2.0 * d.hx()));
        push_row(trips, row, st.u(i - 1, j), -wx / (2.0 * d.hx()));
      }
      if (wy != 0.0) {
        push_row(trips, row, st.u(i, j + 1), wy / (2.0 * d.hy()));
        push_row(trips, row, st.u(i, j - 1), -wy / (2.0 * d.hy()));
      }
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = d.v_index(i, j);
      const double wy = w.v(d, i, j);
      const double wx = 0.25 * (w.u(d, i, j - 1) + w.u(d, i + 1, j - 1) + w.u(d, i, j) + w.u(d, i + 1, j));
      if (wx != 0.0) {
        push_row(trips, row, st.v(i + 1, j), wx / (2.0 * d.hx()));
        push_row(trips, row, st.v(i - 1, j), -wx / (2.0 * d.hx()));
      }
      if (wy != 0.0) {
        push_row(trips, row, st.v(i, j + 1), wy / (2.0 * d.hy()));
        push_row(trips, row, st.v(i, j - 1), -wy / (2.0 * d.hy()));
      }
    }
  }
  SpMat m(d.num_interior(), d.num_extended());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SpMat skew_advection_matrix(const FlowField& w, const FieldOperators& ops) {
  const RectDomain& d = ops.domain();
  const int ni = d.num_interior();
  const SpMat a = advection_matrix(w, ops);
  const SpMat a_int = a.leftCols(ni);
  const SpMat skew = 0.5 * (a_int - SpMat(a_int.transpose()));
  std::vector<Trip> trips;
  for (int k = 0; k < skew.outerSize(); ++k)
    for (SpMat::InnerIterator it(skew, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = ni; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  SpMat m(ni, d.num_extended());
  m.setFromTriplets(trips.begin(), trips.end());
  m.prune(0.0);
  return m;
}

SpMat reaction_matrix(const FlowField& uhat, const FieldOperators& ops) {
  const RectDomain& d = ops.domain();
  const int nx = d.nx(), ny = d.ny();
  const Stencil st(d);
  const Eigen::VectorXd ue = uhat.extended();
  auto U = [&](int i, int j) { return st.u(i, j).eval(ue); };
  auto V = [&](int i, int j) { return st.v(i, j).eval(ue); };
  std::vector<Trip> trips;
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const int row = d.u_index(i, j);
      const double dudx = (U(i + 1, j) - U(i - 1, j)) / (2.0 * d.hx());
      const double dudy = (U(i, j + 1) - U(i, j - 1)) / (2.0 * d.hy());
      if (dudx != 0.0) push_row(trips, row, st.u(i, j), dudx);
      if (dudy != 0.0) {
        for (auto [a, b] : {std::pair{i - 1, j}, std::pair{i, j}, std::pair{i - 1, j + 1}, std::pair{i, j + 1}})
          push_row(trips, row, st.v(a, b), 0.25 * dudy);
      }
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = d.v_index(i, j);
      const double dvdx = (V(i + 1, j) - V(i - 1, j)) / (2.0 * d.hx());
      const double dvdy = (V(i, j + 1) - V(i, j - 1)) / (2.0 * d.hy());
      if (dvdy != 0.0) push_row(trips, row, st.v(i, j), dvdy);
      if (dvdx != 0.0) {
        for (auto [a, b] : {std::pair{i, j - 1}, std::pair{i + 1, j - 1}, std::pair{i, j}, std::pair{i + 1, j}})
          push_row(trips, row, st.u(a, b), 0.25 * dvdx);
      }
    }
  }
  SpMat m(d.num_interior(), d.num_extended());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SpMat oseen_convection(const FlowField& uhat, const FieldOperators& ops) {
  return SpMat(skew_advection_matrix(uhat, ops) + reaction_matrix(uhat, ops));
}

Eigen::VectorXd convection_nonlinear(const FlowField& v, const FieldOperators& ops) {
  return skew_advection_matrix(v, ops) * v.extended();
}

OseenOperator::OseenOperator(const FieldOperators& ops, ReferenceTrajectory ref, double nu)
    : ops_(&ops), ref_(std::move(ref)), nu_(nu) {
  if (!(nu > 0.0)) throw InputError("nu must be positive");
  if (ref_.kind() == ReferenceTrajectory::Kind::Periodic) shape_conv_ = oseen_convection(ref_.shape(), ops);
}

SpMat OseenOperator::convection(double t) const {
  const RectDomain& d = ops_->domain();
  switch (ref_.kind()) {
    case ReferenceTrajectory::Kind::Zero: return SpMat(d.num_interior(), d.num_extended());
    case ReferenceTrajectory::Kind::Periodic: return ref_.amplitude(t) * shape_conv_;
    case ReferenceTrajectory::Kind::Table: break;
  }
  return oseen_convection(ref_.at(t), *ops_);
}

Eigen::VectorXd OseenOperator::drift(double t, const FlowField& v) const {
  const Eigen::VectorXd ext = v.extended();
  Eigen::VectorXd r = nu_ * (ops_->laplacian() * ext);
  if (ref_.kind() != ReferenceTrajectory::Kind::Zero) r -= convection(t) * ext;
  return r;
}

FlowField OseenOperator::apply(double t, const FlowField& v) const {
  FlowField w = FlowField::zeros(ops_->domain());
  w.interior = -drift(t, v);
  return leray_project(w, *ops_).field;
}

Eigen::MatrixXd MatrixTable::at(double t) const {
  if (values.empty()) throw InputError("empty matrix table");
  if (values.size() == 1 || t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const size_t k = static_cast<size_t>(it - times.begin());
  const double s = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1.0 - s) * values[k - 1] + s * values[k];
}

Eigen::MatrixXd control_lift_matrix(const ControlBasis& basis, const FieldOperators& ops) {
  const int m = basis.dim_perp();
  Eigen::MatrixXd L(ops.domain().num_extended(), m);
  for (int k = 0; k < m; ++k) L.col(k) = lift_control(Eigen::VectorXd::Unit(m, k), basis, ops).extended();
  return L;
}

ReducedModel assemble_reduced(const OseenOperator& oseen, const StokesBasis& stokes,
                              const ControlBasis& basis, double T, double dt_A) {
  const FieldOperators& ops = oseen.ops();
  const RectDomain& d = ops.domain();
  if (stokes.E.rows() != d.num_interior()) throw InputError("Stokes basis does not match grid");
  if (!(dt_A > 0.0)) throw InputError("dt_A must be positive");

  ReducedModel model;
  model.N_gal = stokes.N_gal;
  model.M = basis.M;
  model.n_perp = basis.dim_perp();
  model.nu = oseen.nu();
  model.mu = stokes.mu;

  const int ni = d.num_interior();
  const Eigen::MatrixXd L = control_lift_matrix(basis, ops);
  const Eigen::MatrixXd EtM = stokes.mass_weight * stokes.E.transpose();
  const Eigen::MatrixXd lapE = Eigen::MatrixXd(ops.laplacian_interior() * stokes.E);
  const Eigen::MatrixXd lapL = Eigen::MatrixXd(ops.laplacian() * L);

  std::vector<double> times;
  if (oseen.reference().autonomous()) {
    times.push_back(0.0);
  } else {
    const int n = std::max(1, static_cast<int>(std::ceil(T / dt_A - 1e-9)));
    for (int k = 0; k <= n; ++k) times.push_back(k * dt_A);
  }
  for (double t : times) {
    Eigen::MatrixXd axx = oseen.nu() * (EtM * lapE);
    Eigen::MatrixXd axk = oseen.nu() * (EtM * lapL);
    if (oseen.reference().kind() != ReferenceTrajectory::Kind::Zero) {
      const SpMat B = oseen.convection(t);
      const SpMat B_int = B.leftCols(ni);
      axx -= EtM * Eigen::MatrixXd(B_int * stokes.E);
      axk -= EtM * Eigen::MatrixXd(B * L);
    }
    model.A_xx.times.push_back(t);
    model.A_xx.values.push_back(axx);
    model.A_xk.times.push_back(t);
    model.A_xk.values.push_back(axk);
  }
  return model;
}

}  // namespace flowstab
