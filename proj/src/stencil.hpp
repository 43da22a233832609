#pragma once

#include "flowstab/geometry.hpp"

#include <Eigen/Sparse>

#include <utility>
#include <vector>

namespace flowstab::detail {

/// Linear combination of extended-vector entries.
struct Terms {
  std::vector<std::pair<int, double>> items;

  void add(int col, double coef) { items.emplace_back(col, coef); }
  void add(const Terms& other, double scale) {
    for (const auto& [c, a] : other.items) items.emplace_back(c, a * scale);
  }
  double eval(const Eigen::VectorXd& ext) const {
    double s = 0.0;
    for (const auto& [c, a] : items) s += a * ext[c];
    return s;
  }
};

/// Resolves staggered velocity values, including wall faces and ghost values,
/// into extended-vector entries.
///
/// Ghost values across a wall reflect about the interpolated wall velocity:
/// ghost = 2 u_wall - u_inside, with u_wall the average of the two adjacent
/// tangential trace samples.
class Stencil {
 public:
  explicit Stencil(const RectDomain& domain) : d_(domain) {}

  /// u at (i,j), 0<=i<=nx, -1<=j<=ny (j=-1 and j=ny are ghosts, 1<=i<=nx-1 there).
  Terms u(int i, int j) const {
    Terms t;
    const int nx = d_.nx(), ny = d_.ny();
    if (j == -1) {
      wall_tangential(t, Wall::Bottom, i, 1.0);
      t.add(u(i, 0), -1.0);
    } else if (j == ny) {
      wall_tangential(t, Wall::Top, i, -1.0);
      t.add(u(i, ny - 1), -1.0);
    } else if (i == 0) {
      t.add(d_.ext_normal(d_.boundary_index(Wall::Left, j)), -1.0);
    } else if (i == nx) {
      t.add(d_.ext_normal(d_.boundary_index(Wall::Right, j)), 1.0);
    } else {
      t.add(d_.u_index(i, j), 1.0);
    }
    return t;
  }

  /// v at (i,j), -1<=i<=nx, 0<=j<=ny (i=-1 and i=nx are ghosts, 1<=j<=ny-1 there).
  Terms v(int i, int j) const {
    Terms t;
    const int nx = d_.nx(), ny = d_.ny();
    if (i == -1) {
      wall_tangential(t, Wall::Left, j, -1.0);
      t.add(v(0, j), -1.0);
    } else if (i == nx) {
      wall_tangential(t, Wall::Right, j, 1.0);
      t.add(v(nx - 1, j), -1.0);
    } else if (j == 0) {
      t.add(d_.ext_normal(d_.boundary_index(Wall::Bottom, i)), -1.0);
    } else if (j == ny) {
      t.add(d_.ext_normal(d_.boundary_index(Wall::Top, i)), 1.0);
    } else {
      t.add(d_.v_index(i, j), 1.0);
    }
    return t;
  }

  /// Velocity component along the wall at the grid node `k` of that wall,
  /// interpolated from the tangential trace. Adds 2*sign*u_wall.
  void wall_tangential(Terms& t, Wall wall, int k, double sign) const {
    t.add(d_.ext_tangential(d_.boundary_index(wall, k - 1)), sign);
    t.add(d_.ext_tangential(d_.boundary_index(wall, k)), sign);
  }

 private:
  const RectDomain& d_;
};

inline void push_row(std::vector<Eigen::Triplet<double>>& trips, int row, const Terms& t,
                     double scale = 1.0) {
  for (const auto& [c, a] : t.items) trips.emplace_back(row, c, a * scale);
}

}  // namespace flowstab::detail
