#include "flowstab/geometry.hpp"

#include "flowstab/errors.hpp"

#include <cmath>

namespace flowstab {

std::string to_string(Wall wall) {
  switch (wall) {
    case Wall::Bottom: return "bottom";
    case Wall::Right: return "right";
    case Wall::Top: return "top";
    case Wall::Left: return "left";
  }
  return "unknown";
}

Wall wall_from_string(const std::string& name) {
  if (name == "bottom") return Wall::Bottom;
  if (name == "right") return Wall::Right;
  if (name == "top") return Wall::Top;
  if (name == "left") return Wall::Left;
  throw InputError("unknown wall '" + name + "'");
}

RectDomain::RectDomain(double Lx, double Ly, int nx, int ny)
    : Lx_(Lx), Ly_(Ly), nx_(nx), ny_(ny) {
  if (nx < 1 || ny < 1) throw InputError("empty grid");
  if (!(Lx > 0.0) || !(Ly > 0.0)) throw InputError("domain lengths must be positive");
  hx_ = Lx / nx;
  hy_ = Ly / ny;

  boundary_.reserve(num_boundary());
  for (int k = 0; k < nx_; ++k) {
    const double x = (k + 0.5) * hx_;
    boundary_.push_back({Wall::Bottom, k, x, x, 0.0, x, {0.0, -1.0}, {1.0, 0.0}, hx_});
  }
  for (int k = 0; k < ny_; ++k) {
    const double y = (k + 0.5) * hy_;
    boundary_.push_back({Wall::Right, k, Lx_ + y, Lx_, y, y, {1.0, 0.0}, {0.0, 1.0}, hy_});
  }
  for (int k = nx_ - 1; k >= 0; --k) {
    const double x = (k + 0.5) * hx_;
    boundary_.push_back(
        {Wall::Top, k, Lx_ + Ly_ + (Lx_ - x), x, Ly_, x, {0.0, 1.0}, {-1.0, 0.0}, hx_});
  }
  for (int k = ny_ - 1; k >= 0; --k) {
    const double y = (k + 0.5) * hy_;
    boundary_.push_back(
        {Wall::Left, k, 2.0 * Lx_ + Ly_ + (Ly_ - y), 0.0, y, y, {-1.0, 0.0}, {0.0, -1.0}, hy_});
  }
}

int RectDomain::boundary_index(Wall wall, int local) const {
  switch (wall) {
    case Wall::Bottom: return local;
    case Wall::Right: return nx_ + local;
    case Wall::Top: return nx_ + ny_ + (nx_ - 1 - local);
    case Wall::Left: return 2 * nx_ + ny_ + (ny_ - 1 - local);
  }
  return -1;
}

int RectDomain::wall_cells(Wall wall) const {
  return (wall == Wall::Bottom || wall == Wall::Top) ? nx_ : ny_;
}

double RectDomain::wall_length(Wall wall) const {
  return (wall == Wall::Bottom || wall == Wall::Top) ? Lx_ : Ly_;
}

double RectDomain::wall_spacing(Wall wall) const {
  return (wall == Wall::Bottom || wall == Wall::Top) ? hx_ : hy_;
}

Eigen::VectorXd RectDomain::boundary_weights() const {
  Eigen::VectorXd w(num_boundary());
  for (int b = 0; b < num_boundary(); ++b) w[b] = boundary_[b].length;
  return w;
}

RectDomain build_domain(const DomainParams& params) {
  return RectDomain(params.Lx, params.Ly, params.nx, params.ny);
}

namespace {

double bump_xi(double r, double a, double b) { return 2.0 * (r - a) / (b - a) - 1.0; }

}  // namespace

double cutoff(double r, double a, double b) {
  if (r <= a || r >= b) return 0.0;
  const double xi = bump_xi(r, a, b);
  const double s = 1.0 - xi * xi;
  return s * s * s;
}

double cutoff_d1(double r, double a, double b) {
  if (r <= a || r >= b) return 0.0;
  const double xi = bump_xi(r, a, b);
  const double s = 1.0 - xi * xi;
  return -12.0 * xi * s * s / (b - a);
}

double cutoff_d2(double r, double a, double b) {
  if (r <= a || r >= b) return 0.0;
  const double xi = bump_xi(r, a, b);
  const double s = 1.0 - xi * xi;
  const double scale = 2.0 / (b - a);
  return scale * scale * s * (30.0 * xi * xi - 6.0);
}

ControlPatch build_cutoff(const PatchParams& params, const RectDomain& domain) {
  const double wall_len = domain.wall_length(params.wall);
  if (!(params.a_O < params.a_c && params.a_c < params.b_c && params.b_c < params.b_O)) {
    throw InputError("control patch intervals out of order: need a_O < a_c < b_c < b_O");
  }
  if (params.a_O < 0.0 || params.b_O > wall_len) {
    throw InputError("control patch crosses a corner of the " + to_string(params.wall) + " wall");
  }
  if (!(params.eps_chi > 0.0)) throw InputError("eps_chi must be positive");

  ControlPatch patch;
  patch.params = params;
  const int nb = domain.num_boundary();
  patch.chi = Eigen::VectorXd::Zero(nb);
  patch.dchi = Eigen::VectorXd::Zero(nb);
  patch.d2chi = Eigen::VectorXd::Zero(nb);
  patch.in_O.assign(nb, false);
  for (int b = 0; b < nb; ++b) {
    const BoundaryNode& node = domain.boundary()[b];
    if (node.wall != params.wall) continue;
    patch.in_O[b] = node.r > params.a_O && node.r < params.b_O;
    patch.chi[b] = cutoff(node.r, params.a_c, params.b_c);
    patch.dchi[b] = cutoff_d1(node.r, params.a_c, params.b_c);
    patch.d2chi[b] = cutoff_d2(node.r, params.a_c, params.b_c);
  }
  return patch;
}

}  // namespace flowstab
