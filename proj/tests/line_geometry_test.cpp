#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"

#include "fpp/line_geometry.hpp"
#include "fpp/stats.hpp"

using namespace fpp;

namespace {

constexpr double kPi = std::numbers::pi;

std::set<Vertex> as_set(const std::vector<Vertex>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("axis lines through and between cell centers") {
  const LinearFunctional axis{{1.0, 0.0}};
  const DomainBox box(5);
  std::set<Vertex> expected;
  for (int k = -5; k <= 5; ++k) expected.insert({3, k});
  CHECK(as_set(discretize_line(axis, 3.0, box)) == expected);
  CHECK(as_set(discretize_line(axis, 3.4, box)) == expected);
  CHECK(as_set(discretize_line(axis, 2.5, box)) == expected);
  CHECK(discretize_line(axis, 3.5, box).front().x == 4);
  CHECK_THROWS_AS(discretize_line(axis, 7.0, box), EmptyTargetError);
}

TEST_CASE("diagonal line matches exhaustive cell sampling") {
  // x1 + x2 = 2 sampled at dyadic points, so the cell corners it passes
  // through are hit exactly; membership of a point is floor(p + 1/2).
  const DomainBox box(2);
  std::set<Vertex> oracle;
  for (int k = -4 * 1024; k <= 6 * 1024; ++k) {
    const double x1 = k / 1024.0;
    const double x2 = 2.0 - x1;
    const Vertex cell{static_cast<int>(std::floor(x1 + 0.5)), static_cast<int>(std::floor(x2 + 0.5))};
    if (box.contains(cell)) oracle.insert(cell);
  }
  const LinearFunctional half{{0.5, 0.5}};
  CHECK(as_set(discretize_line(half, 1.0, box)) == oracle);
  for (Vertex v : box.vertices()) CHECK(cell_meets_line(half, 1.0, v) == (oracle.count(v) == 1));
}

TEST_CASE("discretized lines separate the two sides") {
  const LinearFunctional g{{0.42, 0.13}};
  const DomainBox box(30);
  for (double alpha : {3.0, 7.77, 10.5}) {
    const std::vector<Vertex> s = discretize_line(g, alpha, box);
    for (Vertex v : s) {
      CHECK(std::abs(g(v) - alpha) <= 0.5 * (0.42 + 0.13) + 1e-12);
    }
  }
}

TEST_CASE("unit weights give the l1 ball") {
  const ShapeEstimate s = estimate_g(DistributionConfig::constant(1.0), angle_grid(16), 40, 2, 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec2 t = to_vec(s.targets[i]);
    CHECK(s.ghat[i] == l1_norm(s.targets[i]) / norm2(t));
    CHECK(s.stderr_ghat[i] == 0.0);
  }
  CHECK(s.ghat[0] == 1.0);
  CHECK(s.ghat[*s.index_of(kPi / 4)] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("exponential shape estimates are self-consistent") {
  const DistributionConfig law = DistributionConfig::exponential(1.0);
  const ShapeEstimate a = estimate_g(law, angle_grid(8), 50, 40, 3);
  const ShapeEstimate b = estimate_g(law, angle_grid(8), 100, 40, 4);
  // Subadditivity: E tau(0, 100 e1) <= 2 E tau(0, 50 e1), so only the
  // upward direction is bounded by noise; the finite-size drop is real.
  const double se = combined_se(a.stderr_ghat[0], b.stderr_ghat[0]);
  CHECK(b.ghat[0] <= a.ghat[0] + 3.0 * se);
  CHECK(a.ghat[0] - b.ghat[0] < 0.05 * a.ghat[0]);

  const ShapeDiagnostics d = diagnose_shape(b);
  CHECK(d.symmetry_violations == 0);
  CHECK(d.convexity_violations == 0);
  CHECK(d.c1 > 0.0);
  CHECK(d.c2 >= d.c1);
  CHECK(b.boundary_touches == 0);

  // Axis symmetry forces a vertical tangent at theta = 0.
  const SupportingFunctional sf = supporting_functional(b, 0.0);
  const double delta = b.realized[1];
  const double se_y = combined_se(b.stderr_ghat[1], b.stderr_ghat.back()) / (2.0 * std::sin(delta));
  CHECK(std::abs(sf.functional.normal.y) <= 3.0 * se_y);
  CHECK(sf.functional.normal.x == doctest::Approx(b.ghat[0]).epsilon(0.02));
}

TEST_CASE("disk mock") {
  const ShapeEstimate disk = disk_shape();
  const SupportingFunctional sf = supporting_functional(disk, 0.0);
  CHECK(sf.functional.normal.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sf.functional.normal.y == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(sf.functional(Vec2{1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(sf.max_excess <= 1e-12);
  for (double theta : {0.0, kPi / 8, 5 * kPi / 4}) {
    const AngleInterval i = sector_I_theta(disk, theta, 1e-6);
    CHECK(i.width() == doctest::Approx(0.0).scale(1.0));
    CHECK(i.contains(theta));
  }
}

TEST_CASE("l1-ball mock") {
  const ShapeEstimate ball = l1_ball_shape();
  const SupportingFunctional facet = supporting_functional(ball, kPi / 4);
  CHECK(facet.functional.normal.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(facet.functional.normal.y == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t j = 0; j <= 32; ++j) CHECK(facet.functional(ball.boundary_point(j)) == doctest::Approx(1.0));

  const AngleInterval quadrant = sector_I_theta(ball, kPi / 4, 1e-6);
  CHECK(quadrant.lo == doctest::Approx(0.0).scale(1.0));
  CHECK(quadrant.hi == doctest::Approx(kPi / 2));

  const AngleInterval corner = sector_I_theta(ball, 0.0, 1e-6);
  CHECK(corner.width() == doctest::Approx(0.0).scale(1.0));
  CHECK(supporting_functional(ball, 0.0).functional.normal.x == doctest::Approx(1.0));
}

TEST_CASE("contact sector of a calibrated rho") {
  const ShapeEstimate ball = l1_ball_shape();
  const AngleInterval j = sector_J_rho(ball, {1.0, 1.0}, 1e-9);
  CHECK(j.width() == doctest::Approx(kPi / 2));
  const AngleInterval d = sector_J_rho(disk_shape(), {0.0, 1.0}, 1e-9);
  CHECK(d.contains(kPi / 2));
  CHECK(d.width() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("off-grid angles are rejected") {
  CHECK_THROWS_AS(supporting_functional(disk_shape(), 0.001), RangeError);
  CHECK_FALSE(disk_shape().index_of(0.3).has_value());
  CHECK(wrap_angle(-kPi / 2) == doctest::Approx(3 * kPi / 2));
  CHECK(angle_distance(0.1, 2 * kPi - 0.1) == doctest::Approx(0.2));
}

TEST_CASE("lattice symmetrization") {
  CHECK(symmetrize_lattice(disk_shape()).ghat == disk_shape().ghat);

  const ShapeEstimate s = estimate_g(DistributionConfig::exponential(1.0), angle_grid(8), 20, 10, 6);
  const ShapeEstimate sym = symmetrize_lattice(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    // Quarter turns and the reflection in the diagonal map the grid to itself.
    const std::size_t quarter = (i + 4) % 16;
    const std::size_t mirror = (20 - i) % 16;
    CHECK(sym.ghat[i] == doctest::Approx(sym.ghat[quarter]).epsilon(1e-14));
    CHECK(sym.ghat[i] == doctest::Approx(sym.ghat[mirror]).epsilon(1e-14));
  }
  const double axes = (s.ghat[0] + s.ghat[4] + s.ghat[8] + s.ghat[12]) / 4.0;
  CHECK(sym.ghat[0] == doctest::Approx(axes).epsilon(1e-14));
  CHECK(supporting_functional(sym, 0.0).functional.normal.y == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}
