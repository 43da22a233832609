#include "flowstab/field.hpp"

#include <algorithm>

namespace flowstab {

FlowField FlowField::zeros(const RectDomain& domain) {
  return {Eigen::VectorXd::Zero(domain.num_interior()), Eigen::VectorXd::Zero(domain.num_boundary()),
          Eigen::VectorXd::Zero(domain.num_boundary())};
}

FlowField FlowField::from_extended(const RectDomain& domain, const Eigen::VectorXd& ext) {
  const int ni = domain.num_interior();
  const int nb = domain.num_boundary();
  return {ext.head(ni), ext.segment(ni, nb), ext.tail(nb)};
}

Eigen::VectorXd FlowField::extended() const {
  Eigen::VectorXd ext(interior.size() + normal.size() + tangential.size());
  ext << interior, normal, tangential;
  return ext;
}

double FlowField::u(const RectDomain& domain, int i, int j) const {
  if (i == 0) return -normal[domain.boundary_index(Wall::Left, j)];
  if (i == domain.nx()) return normal[domain.boundary_index(Wall::Right, j)];
  return interior[domain.u_index(i, j)];
}

double FlowField::v(const RectDomain& domain, int i, int j) const {
  if (j == 0) return -normal[domain.boundary_index(Wall::Bottom, i)];
  if (j == domain.ny()) return normal[domain.boundary_index(Wall::Top, i)];
  return interior[domain.v_index(i, j)];
}

bool FlowField::has_zero_trace(double tol) const { return trace_sup_norm() <= tol; }

double FlowField::trace_sup_norm() const {
  double m = 0.0;
  if (normal.size() > 0) m = std::max(m, normal.cwiseAbs().maxCoeff());
  if (tangential.size() > 0) m = std::max(m, tangential.cwiseAbs().maxCoeff());
  return m;
}

FlowField& FlowField::operator+=(const FlowField& other) {
  interior += other.interior;
  normal += other.normal;
  tangential += other.tangential;
  return *this;
}

FlowField& FlowField::operator-=(const FlowField& other) {
  interior -= other.interior;
  normal -= other.normal;
  tangential -= other.tangential;
  return *this;
}

FlowField& FlowField::operator*=(double s) {
  interior *= s;
  normal *= s;
  tangential *= s;
  return *this;
}

FlowField operator+(FlowField a, const FlowField& b) { return a += b; }
FlowField operator-(FlowField a, const FlowField& b) { return a -= b; }
FlowField operator*(double s, FlowField a) { return a *= s; }

}  // namespace flowstab
