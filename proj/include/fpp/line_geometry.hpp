#pragma once

// Limit-shape estimation, supporting functionals g_w(x) = a*x1 + b*x2, the
// lines L_alpha = {g_w = alpha} and their lattice discretization, and the
// contact sectors of supporting lines.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/weight_field.hpp"

namespace fpp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 to_vec(Vertex v) { return {static_cast<double>(v.x), static_cast<double>(v.y)}; }
inline Vec2 unit_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Angle reduced to [0, 2pi).
double wrap_angle(double theta);
// Circle metric on angles.
double angle_distance(double a, double b);

struct LinearFunctional {
  Vec2 normal{1.0, 0.0};

  double operator()(Vec2 p) const { return dot(normal, p); }
  double operator()(Vertex v) const { return dot(normal, to_vec(v)); }

  friend bool operator==(const LinearFunctional&, const LinearFunctional&) = default;
};

// True iff the half-open unit cell y + [-1/2, 1/2)^2 meets {g = alpha}.
bool cell_meets_line(const LinearFunctional& g, double alpha, Vertex y);

class EmptyTargetError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// In-box vertices whose unit cell meets L_alpha, sorted lexicographically.
// Throws EmptyTargetError when the line misses the box.
std::vector<Vertex> discretize_line(const LinearFunctional& g, double alpha, const DomainBox& box);

struct ShapeEstimate {
  std::vector<double> directions;  // grid angles
  std::vector<double> realized;    // angle of the lattice target actually measured
  std::vector<Vertex> targets;     // lattice targets (empty for analytic fixtures)
  std::vector<double> ghat;        // estimate of g at the unit vector of the realized angle
  std::vector<double> stderr_ghat;
  int n_used = 0;
  int replicas = 0;
  std::uint64_t seed = 0;
  std::string law;
  int boundary_touches = 0;
  bool full_circle = true;

  std::size_t size() const { return directions.size(); }
  // Point of the estimated boundary of B in grid direction i.
  Vec2 boundary_point(std::size_t i) const;
  // Grid index of angle theta; nullopt if theta is not a grid angle.
  std::optional<std::size_t> index_of(double theta, double tol = 1e-9) const;
};

// Grid jpi/k for j = 0..2k-1 (default step pi/64).
std::vector<double> angle_grid(int steps_per_half_turn = 64);

// Analytic fixture: ghat(theta) = gauge(theta) on the grid, zero error.
ShapeEstimate make_mock_shape(const std::function<double(double)>& gauge, const std::vector<double>& directions);
ShapeEstimate disk_shape(int steps_per_half_turn = 64);
ShapeEstimate l1_ball_shape(int steps_per_half_turn = 64);

ShapeEstimate estimate_g(const DistributionConfig& config, const std::vector<double>& directions, int n,
                         int replicas, std::uint64_t seed, unsigned threads = 1);

struct SupportingFunctional {
  LinearFunctional functional;
  bool used_fallback = false;
  // max over grid points of g_w(boundary point) - 1; <= 0 for an exact
  // supporting line, positive values measure the tangent-fit defect.
  double max_excess = 0.0;
};

SupportingFunctional supporting_functional(const ShapeEstimate& shape, double theta);

struct AngleInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double theta, double tol = 1e-12) const;
  double width() const;
};

// Contact set of the supporting line at theta: grid angles whose boundary
// point satisfies |g_w(p) - 1| <= tol, grown contiguously from theta.
// tol defaults to twice the relative standard error of ghat at theta (1e-9
// for zero-error fixtures).
AngleInterval sector_I_theta(const ShapeEstimate& shape, double theta, std::optional<double> tol = std::nullopt);

// Contact set of the line {x . rho = 1} with the estimated shape, grown from
// the grid point maximizing rho . p.
AngleInterval sector_J_rho(const ShapeEstimate& shape, Vec2 rho, double tol);

struct ShapeDiagnostics {
  double c1 = 0.0;  // min ghat on the unit circle
  double c2 = 0.0;  // max ghat on the unit circle
  int symmetry_violations = 0;   // |ghat(t) - ghat(t + pi/2)| > 3 combined s.e.
  int convexity_violations = 0;  // boundary point inside its neighbors' chord by > 3 s.e.
};

ShapeDiagnostics diagnose_shape(const ShapeEstimate& shape);

// Averages ghat over the images of each lattice target under the eight
// symmetries of Z^2 that are present on the grid. The s.e. is the mean of
// the orbit s.e. values (orbit members share replicas, so not divided down).
// Only valid for laws invariant under those symmetries; analytic fixtures
// are returned unchanged.
ShapeEstimate symmetrize_lattice(const ShapeEstimate& shape);

}  // namespace fpp
