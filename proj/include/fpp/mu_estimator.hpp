#pragma once

// Alpha-averaged increment fields, the reconstructed function f, the mean
// identity for f(-x, 0), and the gradient estimate rho-hat with its checks.
//
// Sign convention: B(x, y) = tau(x, S) - tau(y, S), so f(0, x) grows toward
// the far side of the line. With weights identically 1 and the axis
// functional, rho-hat = (1, 0).

#include <cstdint>
#include <vector>

#include "fpp/busemann.hpp"
#include "fpp/line_geometry.hpp"
#include "fpp/stats.hpp"

namespace fpp {

// Midpoints offset + h/2 + k h inside [offset, offset + n]. n/h must be a
// whole number so the midpoint rule covers the interval exactly.
struct AlphaGrid {
  double n = 1.0;
  double h = 1.0;
  double offset = 0.0;

  AlphaGrid() = default;
  AlphaGrid(double n, double h, double offset = 0.0);
  std::vector<double> values() const;
};

struct AveragedIncrements {
  IncrementConfiguration fbar;  // averaged == true
  AlphaGrid grid;
  std::uint64_t seed = 0;
  std::vector<IncrementConfiguration> per_alpha;  // filled only on request
};

AveragedIncrements average_increments(const WeightField& field, const LinearFunctional& functional,
                                      const AlphaGrid& grid, const DomainBox& domain, const DomainBox& window,
                                      bool keep_per_alpha = false);

// f(x, y) along the staircase x -> (y1, x2) -> y.
double reconstruct_f(const IncrementConfiguration& inc, Vertex x, Vertex y);
double reconstruct_f(const AveragedIncrements& inc, Vertex x, Vertex y);
// Same sum along x -> (x1, y2) -> y.
double reconstruct_f_transposed(const IncrementConfiguration& inc, Vertex x, Vertex y);

// f(origin, v) for every v in the window, in window index order.
std::vector<double> reconstruct_field(const IncrementConfiguration& inc, Vertex origin);

// Values of alpha in (lo, hi) where the discretized line changes inside the
// box, sorted, with lo and hi as the outer ends. tau(0, L_alpha) is constant
// between consecutive entries.
std::vector<double> alpha_breakpoints(const LinearFunctional& functional, double lo, double hi,
                                      const DomainBox& box);

// Integral over [a, b] (signed) of alpha -> min over L_alpha-hat of dist,
// exact for the piecewise constant integrand.
double integrate_line_minimum(const PassageResult& potential, const LinearFunctional& functional, double a,
                              double b);

struct IdentityReport {
  Vertex x;
  double n = 0.0;
  double g_x = 0.0;      // g_w(x)
  int half_width = 0;    // domain used per replica
  int replicas = 0;
  std::uint64_t seed = 0;
  MeanEstimate lhs;      // (1/n) int_0^n [tau(-x, L_a) - tau(0, L_a)] da
  MeanEstimate rhs;      // (1/n) [int_n^{n+g} - int_0^g] tau(0, L_a) da
  MeanEstimate paired;   // lhs - rhs per replica
  double combined_se = 0.0;
  bool agree = false;    // |lhs - rhs| <= 3 combined_se (or both exact and equal)
  double drift = 0.0;    // |lhs - g_w(x)|
  long boundary_flags = 0;
};

IdentityReport check_mean_identity(const DistributionConfig& config, const LinearFunctional& functional, Vertex x,
                                   double n, int replicas, std::uint64_t seed, unsigned threads = 1,
                                   int half_width = 0);

struct RhoOptions {
  int n_radial = 32;        // W: rho_q = f(0, round(W q)) / W
  double alpha_span = 16;   // grid length, in functional units
  double h = 1.0;
  int margin = 0;           // 0: max(W / 2, 8) lattice steps between window and the nearest line
  int window_half_width = 0;  // 0: W
  bool keep_increments = false;
};

// Domain, window and alpha grid for a functional and a window half width.
struct RhoGeometry {
  DomainBox domain;
  DomainBox window;
  AlphaGrid grid;
};
RhoGeometry rho_geometry(const LinearFunctional& functional, int window_half_width, const RhoOptions& options);

struct RhoEstimate {
  Vec2 rho;        // (rho_e1, rho_e2)
  Vec2 std_error;
  MeanEstimate rho_diagonal;      // rho_{e1+e2}
  MeanEstimate linearity_defect;  // rho_{e1+e2} - rho_e1 - rho_e2, paired per replica
  int n_radial = 0;
  int replicas = 0;
  std::uint64_t seed = 0;
  LinearFunctional functional;
  RhoGeometry geometry;
  std::vector<Vec2> per_replica;  // (f(0, W e1), f(0, W e2)) / W
  std::vector<IncrementConfiguration> increments;  // averaged fields, when kept
};

RhoEstimate estimate_rho(const DistributionConfig& config, const LinearFunctional& functional, int replicas,
                         std::uint64_t seed, const RhoOptions& options = {}, unsigned threads = 1);
// Single-replica version on a prepared averaged field.
Vec2 rho_from_increments(const IncrementConfiguration& inc, int n_radial);

struct AnnulusResidual {
  int r = 0;
  double max = 0.0;
  double mean = 0.0;
  long points = 0;
};

struct ResidualStats {
  std::vector<AnnulusResidual> annuli;
  bool max_nonincreasing = false;
};

// |f(0, x) - x . rho| / |x|_1 over r/2 <= |x|_1 <= r for each r of the ladder.
ResidualStats shape_residual(const IncrementConfiguration& inc, Vec2 rho, const std::vector<int>& ladder = {16, 32, 64});

struct SupportingLineReport {
  double theta = 0.0;
  double dot = 0.0;  // rho . w-hat with w-hat = v_theta / ghat(theta)
  double dot_se = 0.0;
  bool dot_ok = false;
  int domination_violations = 0;  // grid angles with rho . v > ghat + 3 s.e.
  double max_domination_excess = 0.0;
  bool tangent_degenerate = false;
  Vec2 functional_normal;         // (g_w(e1), g_w(e2)) from the tangent fit
  Vec2 normal_se;
  bool normal_ok = false;         // both coordinates within 3 combined s.e.
  bool all() const { return dot_ok && domination_violations == 0 && (tangent_degenerate || normal_ok); }
};

SupportingLineReport supporting_line_check(Vec2 rho, Vec2 rho_se, const ShapeEstimate& shape, double theta);

}  // namespace fpp
