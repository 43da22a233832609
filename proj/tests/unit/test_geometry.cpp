#include "flowstab/errors.hpp"
#include "flowstab/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

using namespace flowstab;

TEST_CASE("MAC grid counts on a 4x4 grid") {
  const RectDomain d(1.0, 1.0, 4, 4);
  CHECK(d.num_cells() == 16);
  CHECK(d.num_u_faces() == 20);
  CHECK(d.num_v_faces() == 20);
  CHECK(d.num_boundary() == 16);
  CHECK(d.num_interior() == 12 + 12);
  CHECK(d.num_extended() == 24 + 32);
}

TEST_CASE("empty grid is rejected") {
  try {
    RectDomain d(1.0, 1.0, 0, 4);
    FAIL("expected an exception");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("empty grid") != std::string::npos);
  }
}

TEST_CASE("boundary weights sum to the perimeter") {
  const double pi = std::numbers::pi;
  const RectDomain d(pi, 1.0, 48, 48);
  CHECK(std::abs(d.boundary_weights().sum() - 2.0 * (pi + 1.0)) < 1e-12);
  CHECK(std::abs(d.perimeter() - 2.0 * (pi + 1.0)) < 1e-12);
}

TEST_CASE("boundary nodes run counterclockwise with outward normals") {
  const RectDomain d(2.0, 1.0, 6, 5);
  const auto& nodes = d.boundary();
  for (size_t b = 1; b < nodes.size(); ++b) CHECK(nodes[b].s > nodes[b - 1].s);
  for (const auto& n : nodes) {
    // outward: stepping along the normal leaves the rectangle
    const double x = n.x + 1e-3 * n.normal.x(), y = n.y + 1e-3 * n.normal.y();
    CHECK((x < 0 || x > 2.0 || y < 0 || y > 1.0));
    // counterclockwise tangent is the normal rotated by +90 degrees
    CHECK(std::abs(n.tangent.x() + n.normal.y()) < 1e-15);
    CHECK(std::abs(n.tangent.y() - n.normal.x()) < 1e-15);
  }
  CHECK(d.boundary_index(Wall::Top, 5) == 6 + 5);
  CHECK(d.boundary_index(Wall::Left, 0) == 2 * 6 + 5 + 4);
}

TEST_CASE("cutoff closed form") {
  CHECK(cutoff(0.5, 0.2, 0.8) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cutoff(0.2, 0.2, 0.8) == 0.0);
  CHECK(cutoff_d1(0.2, 0.2, 0.8) == doctest::Approx(0.0));
  CHECK(cutoff_d2(0.2, 0.2, 0.8) == doctest::Approx(0.0));
  CHECK(std::abs(cutoff(0.425, 0.35, 0.65) - 0.421875) < 1e-14);

  // derivatives against central differences
  const double r = 0.61, h = 1e-5;
  CHECK(cutoff_d1(r, 0.2, 0.8) ==
        doctest::Approx((cutoff(r + h, 0.2, 0.8) - cutoff(r - h, 0.2, 0.8)) / (2 * h)).epsilon(1e-7));
  CHECK(cutoff_d2(r, 0.2, 0.8) ==
        doctest::Approx((cutoff_d1(r + h, 0.2, 0.8) - cutoff_d1(r - h, 0.2, 0.8)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("patch validation") {
  const RectDomain d(1.0, 1.0, 16, 16);
  PatchParams p;
  CHECK_NOTHROW(build_cutoff(p, d));
  p.a_c = 0.9;
  CHECK_THROWS_AS(build_cutoff(p, d), InputError);
  p = PatchParams{};
  p.b_O = 1.2;
  CHECK_THROWS_AS(build_cutoff(p, d), InputError);
}

TEST_CASE("cutoff is supported on the patch") {
  const RectDomain d(1.0, 1.0, 20, 20);
  const ControlPatch patch = build_cutoff(PatchParams{}, d);
  for (int b = 0; b < d.num_boundary(); ++b) {
    const auto& n = d.boundary()[b];
    if (n.wall != Wall::Bottom || n.r <= 0.2 || n.r >= 0.8) {
      CHECK(patch.chi[b] == 0.0);
    } else {
      CHECK(patch.chi[b] > 0.0);
      CHECK(patch.in_O[b]);
    }
  }
}
