#include <cmath>
#include <set>

#include "doctest.h"

#include "fpp/mu_estimator.hpp"

using namespace fpp;

namespace {

const DistributionConfig kExp = DistributionConfig::exponential(1.0);
const LinearFunctional kAxis{{1.0, 0.0}};
const LinearFunctional kTilted{{0.42, 0.13}};

double line_minimum(const PassageResult& p, const LinearFunctional& g, double alpha) {
  double best = std::numeric_limits<double>::infinity();
  for (Vertex v : discretize_line(g, alpha, p.box())) best = std::min(best, p.dist(v));
  return best;
}

// Fine midpoint rule, independent of the breakpoint bookkeeping.
double midpoint_integral(const PassageResult& p, const LinearFunctional& g, double a, double b, int steps) {
  const double dx = (b - a) / steps;
  double sum = 0.0;
  for (int k = 0; k < steps; ++k) sum += line_minimum(p, g, a + (k + 0.5) * dx);
  return sum * dx;
}

}  // namespace

TEST_CASE("alpha grids") {
  const AlphaGrid g(4.0, 0.5, 10.0);
  const std::vector<double> v = g.values();
  REQUIRE(v.size() == 8);
  CHECK(v.front() == 10.25);
  CHECK(v.back() == 13.75);
  CHECK_THROWS_AS(AlphaGrid(4.0, 0.3), PreconditionError);
  CHECK_THROWS_AS(AlphaGrid(0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(AlphaGrid(1.0, 2.0), PreconditionError);
  CHECK_THROWS_AS(AlphaGrid(1.0, std::nan("")), PreconditionError);
}

TEST_CASE("a one point grid is the single-alpha configuration") {
  const DomainBox domain(30);
  const DomainBox window(6);
  const WeightField f(kExp, 21);
  const AveragedIncrements avg = average_increments(f, kAxis, AlphaGrid(1.0, 1.0, 19.5), domain, window);
  const IncrementConfiguration one = increment_config(f, kAxis, 20.0, domain, window);
  CHECK(avg.fbar.averaged);
  CHECK(avg.fbar.theta1 == one.theta1);
  CHECK(avg.fbar.theta2 == one.theta2);
}

TEST_CASE("averaging equals the mean of independent configurations") {
  const DomainBox domain(40);
  const DomainBox window(8);
  const WeightField f(kExp, 22);
  const AlphaGrid grid(6.0, 0.75, 10.0);
  const AveragedIncrements avg = average_increments(f, kTilted, grid, domain, window, true);
  REQUIRE(avg.per_alpha.size() == grid.values().size());
  std::vector<double> sum1(avg.fbar.theta1.size(), 0.0);
  std::vector<double> sum2(avg.fbar.theta2.size(), 0.0);
  for (double a : grid.values()) {
    const IncrementConfiguration c = increment_config(f, kTilted, a, domain, window);
    for (std::size_t i = 0; i < sum1.size(); ++i) sum1[i] += c.theta1[i];
    for (std::size_t i = 0; i < sum2.size(); ++i) sum2[i] += c.theta2[i];
  }
  const double k = static_cast<double>(grid.values().size());
  for (std::size_t i = 0; i < sum1.size(); ++i) REQUIRE(std::abs(avg.fbar.theta1[i] - sum1[i] / k) <= 1e-12);
  for (std::size_t i = 0; i < sum2.size(); ++i) REQUIRE(std::abs(avg.fbar.theta2[i] - sum2[i] / k) <= 1e-12);
  CHECK(avg.fbar.max_abs_curl() <= 1e-9);
}

TEST_CASE("reconstructed f is additive and path independent") {
  const DomainBox domain(40);
  const DomainBox window(10);
  const WeightField f(kExp, 23);
  const AveragedIncrements avg = average_increments(f, kAxis, AlphaGrid(8.0, 1.0, 16.0), domain, window);
  const IncrementConfiguration& inc = avg.fbar;
  const std::vector<double> field = reconstruct_field(inc, {0, 0});
  for (Vertex x : DomainBox(9).vertices()) {
    CHECK(reconstruct_f(inc, x, x) == 0.0);
    REQUIRE(std::abs(reconstruct_f(inc, {0, 0}, x) - field[window.index(x)]) <= 1e-9);
    REQUIRE(std::abs(reconstruct_f(inc, {0, 0}, x) - reconstruct_f_transposed(inc, {0, 0}, x)) <= 1e-9);
    const Vertex y{-x.y, x.x};
    REQUIRE(std::abs(reconstruct_f(inc, x, {3, -2}) + reconstruct_f(inc, {3, -2}, y) - reconstruct_f(inc, x, y)) <=
            1e-9);
  }
  CHECK(reconstruct_f(avg, {1, 1}, {-2, 4}) == reconstruct_f(inc, {1, 1}, {-2, 4}));
}

TEST_CASE("line breakpoints bound the constant pieces") {
  const DomainBox box(6);
  for (const LinearFunctional& g : {kAxis, kTilted}) {
    const std::vector<double> bp = alpha_breakpoints(g, 0.3, 2.9, box);
    CHECK(bp.front() == 0.3);
    CHECK(bp.back() == 2.9);
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
      const double w = bp[i + 1] - bp[i];
      const std::vector<Vertex> first = discretize_line(g, bp[i] + 0.1 * w, box);
      for (double t : {0.3, 0.5, 0.9}) REQUIRE(discretize_line(g, bp[i] + t * w, box) == first);
    }
  }
  const std::vector<double> axis = alpha_breakpoints(kAxis, 0.2, 3.7, box);
  CHECK(axis == std::vector<double>{0.2, 0.5, 1.5, 2.5, 3.5, 3.7});
}

TEST_CASE("line-minimum integral against a fine midpoint rule") {
  const DomainBox box(12);
  const EdgeWeights w(WeightField(kExp, 24), box);
  const Vertex src[1] = {{-2, 1}};
  const PassageResult p = sweep(w, src);
  // Axis breakpoints are half integers, so a dyadic midpoint rule is exact.
  CHECK(integrate_line_minimum(p, kAxis, 1.0, 6.5) == doctest::Approx(midpoint_integral(p, kAxis, 1.0, 6.5, 44))
                                                            .epsilon(1e-14));
  CHECK(integrate_line_minimum(p, kAxis, 6.5, 1.0) == doctest::Approx(-midpoint_integral(p, kAxis, 1.0, 6.5, 44)));
  const double fine = midpoint_integral(p, kTilted, 0.7, 3.1, 24000);
  CHECK(integrate_line_minimum(p, kTilted, 0.7, 3.1) == doctest::Approx(fine).epsilon(1e-3));
  CHECK(integrate_line_minimum(p, kTilted, 2.0, 2.0) == 0.0);
}

TEST_CASE("mean identity at the origin is zero") {
  const IdentityReport r = check_mean_identity(kExp, kAxis, {0, 0}, 8.0, 10, 25);
  CHECK(r.lhs.mean == 0.0);
  CHECK(r.rhs.mean == 0.0);
  CHECK(r.agree);
}

TEST_CASE("unit weights: rho and residuals in closed form") {
  const RhoEstimate est = estimate_rho(DistributionConfig::constant(1.0), kAxis, 3, 1, {.n_radial = 16});
  CHECK(est.rho.x == 1.0);
  CHECK(est.rho.y == 0.0);
  CHECK(est.rho_diagonal.mean == 1.0);
  CHECK(est.linearity_defect.mean == 0.0);

  RhoOptions opt;
  opt.n_radial = 16;
  opt.keep_increments = true;
  opt.window_half_width = 32;
  const RhoEstimate kept = estimate_rho(DistributionConfig::constant(1.0), kAxis, 2, 1, opt);
  REQUIRE(kept.increments.size() == 2);
  const IncrementConfiguration& inc = kept.increments.front();
  CHECK(rho_from_increments(inc, 16) == Vec2{1.0, 0.0});
  for (Vertex x : DomainBox(10).vertices()) REQUIRE(reconstruct_f(inc, {0, 0}, x) == x.x);
  const ResidualStats res = shape_residual(inc, kept.rho, {8, 16, 32});
  REQUIRE(res.annuli.size() == 3);
  for (const AnnulusResidual& a : res.annuli) {
    CHECK(a.points > 0);
    CHECK(a.max <= 1.0 / a.r);
  }
  CHECK(res.max_nonincreasing);
}

TEST_CASE("supporting line checks on analytic shapes") {
  const ShapeEstimate disk = disk_shape();
  const SupportingLineReport ok = supporting_line_check({1.0, 0.0}, {0.01, 0.01}, disk, 0.0);
  CHECK(ok.dot == doctest::Approx(1.0));
  CHECK(ok.domination_violations == 0);
  CHECK(ok.all());

  const SupportingLineReport big = supporting_line_check({1.2, 0.0}, {0.01, 0.01}, disk, 0.0);
  CHECK_FALSE(big.dot_ok);
  CHECK(big.domination_violations > 0);
  CHECK_FALSE(big.all());

  // Any point of the facet of the l1 ball is a valid gradient there.
  const ShapeEstimate ball = l1_ball_shape();
  const double facet = std::numbers::pi / 4;
  CHECK(supporting_line_check({1.0, 1.0}, {0.01, 0.01}, ball, facet).all());
  const SupportingLineReport tilted = supporting_line_check({1.0, 1.0}, {0.01, 0.01}, ball, 0.0);
  CHECK(tilted.domination_violations == 0);
  CHECK(tilted.dot == doctest::Approx(1.0));
}
