#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace flowstab {

/// Walls of the rectangle, listed in counterclockwise order starting at y = 0.
enum class Wall { Bottom, Right, Top, Left };

std::string to_string(Wall wall);
Wall wall_from_string(const std::string& name);

struct DomainParams {
  double Lx = 1.0;
  double Ly = 1.0;
  int nx = 24;
  int ny = 24;
};

/// One boundary segment of the staggered grid, sampled at its midpoint.
struct BoundaryNode {
  Wall wall;
  int local;  ///< index along the wall, increasing with x (bottom/top) or y (left/right)
  double s;   ///< arc coordinate of the midpoint along the closed counterclockwise curve
  double x;
  double y;
  double r;   ///< wall coordinate: x on bottom/top walls, y on left/right walls
  Eigen::Vector2d normal;   ///< outward unit normal
  Eigen::Vector2d tangent;  ///< counterclockwise unit tangent
  double length;
};

/// Rectangle [0,Lx]x[0,Ly] with a MAC (staggered) grid.
///
/// Unknown layout used throughout the library:
///  - pressure cells (i,j), 0<=i<nx, 0<=j<ny, index j*nx+i;
///  - interior u faces (i,j), 1<=i<=nx-1, 0<=j<ny, followed by interior
///    v faces (i,j), 0<=i<nx, 1<=j<=ny-1;
///  - boundary nodes in arc order: bottom, right, top (x decreasing),
///    left (y decreasing). Each carries a normal and a tangential scalar.
///
/// An "extended" vector is [interior faces; normal trace; tangential trace].
class RectDomain {
 public:
  RectDomain(double Lx, double Ly, int nx, int ny);

  double Lx() const { return Lx_; }
  double Ly() const { return Ly_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double cell_area() const { return hx_ * hy_; }

  int num_cells() const { return nx_ * ny_; }
  int num_u_faces() const { return (nx_ + 1) * ny_; }
  int num_v_faces() const { return nx_ * (ny_ + 1); }
  int num_boundary() const { return 2 * (nx_ + ny_); }
  int num_u_interior() const { return (nx_ - 1) * ny_; }
  int num_v_interior() const { return nx_ * (ny_ - 1); }
  int num_interior() const { return num_u_interior() + num_v_interior(); }
  int num_extended() const { return num_interior() + 2 * num_boundary(); }
  int num_interior_nodes() const { return (nx_ - 1) * (ny_ - 1); }

  int cell_index(int i, int j) const { return j * nx_ + i; }
  int u_index(int i, int j) const { return j * (nx_ - 1) + (i - 1); }
  int v_index(int i, int j) const { return num_u_interior() + (j - 1) * nx_ + i; }
  int node_index(int i, int j) const { return (j - 1) * (nx_ - 1) + (i - 1); }
  int boundary_index(Wall wall, int local) const;
  /// Column of a boundary normal / tangential value in an extended vector.
  int ext_normal(int boundary) const { return num_interior() + boundary; }
  int ext_tangential(int boundary) const { return num_interior() + num_boundary() + boundary; }

  int wall_cells(Wall wall) const;
  double wall_length(Wall wall) const;
  double wall_spacing(Wall wall) const;

  const std::vector<BoundaryNode>& boundary() const { return boundary_; }
  /// Quadrature weights of the closed-curve trapezoid rule at segment midpoints.
  Eigen::VectorXd boundary_weights() const;
  double perimeter() const { return 2.0 * (Lx_ + Ly_); }

 private:
  double Lx_, Ly_;
  int nx_, ny_;
  double hx_, hy_;
  std::vector<BoundaryNode> boundary_;
};

RectDomain build_domain(const DomainParams& params);

struct PatchParams {
  Wall wall = Wall::Bottom;
  double a_c = 0.2;
  double b_c = 0.8;
  double a_O = 0.15;
  double b_O = 0.85;
  double eps_chi = 1e-3;
};

/// Control patch Gamma_c inside the boundary piece O on a single wall, with the
/// sextic C^2 cutoff chi sampled at every boundary node.
struct ControlPatch {
  PatchParams params;
  Eigen::VectorXd chi;    ///< per boundary node
  Eigen::VectorXd dchi;   ///< d chi / dr
  Eigen::VectorXd d2chi;  ///< d^2 chi / dr^2
  std::vector<bool> in_O;  ///< node lies in the open piece O
  double length_O() const { return params.b_O - params.a_O; }
};

/// chi(r) = (1 - xi^2)^3 with xi = 2 (r - a)/(b - a) - 1 on [a,b], zero outside.
double cutoff(double r, double a, double b);
double cutoff_d1(double r, double a, double b);
double cutoff_d2(double r, double a, double b);

ControlPatch build_cutoff(const PatchParams& params, const RectDomain& domain);

}  // namespace flowstab
