#pragma once

#include "flowstab/geometry.hpp"

#include <Eigen/Dense>

namespace flowstab {

/// Staggered-grid velocity field together with its boundary trace.
///
/// Interior face values live in `interior`. The boundary-normal faces are not
/// stored separately: their values are the outward normal trace (with the sign
/// of the wall normal), so face values and trace can never disagree.
struct FlowField {
  Eigen::VectorXd interior;
  Eigen::VectorXd normal;
  Eigen::VectorXd tangential;

  static FlowField zeros(const RectDomain& domain);
  static FlowField from_extended(const RectDomain& domain, const Eigen::VectorXd& ext);
  Eigen::VectorXd extended() const;

  /// u on vertical face (i,j), 0<=i<=nx, 0<=j<ny (wall faces come from the trace).
  double u(const RectDomain& domain, int i, int j) const;
  /// v on horizontal face (i,j), 0<=i<nx, 0<=j<=ny.
  double v(const RectDomain& domain, int i, int j) const;

  bool has_zero_trace(double tol = 0.0) const;
  double trace_sup_norm() const;

  FlowField& operator+=(const FlowField& other);
  FlowField& operator-=(const FlowField& other);
  FlowField& operator*=(double s);
};

FlowField operator+(FlowField a, const FlowField& b);
FlowField operator-(FlowField a, const FlowField& b);
FlowField operator*(double s, FlowField a);

}  // namespace flowstab
