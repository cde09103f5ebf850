#include "fpp/line_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "fpp/parallel.hpp"
#include "fpp/passage.hpp"
#include "fpp/stats.hpp"

namespace fpp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Evenly spaced angles that wrap around the whole circle.
bool is_uniform_circle(const std::vector<double>& dirs) {
  if (dirs.size() < 3) return false;
  const double step = kTwoPi / static_cast<double>(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (angle_distance(dirs[i], dirs[0] + step * static_cast<double>(i)) > 1e-9) return false;
  }
  return true;
}

}  // namespace

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

double angle_distance(double a, double b) {
  const double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

bool cell_meets_line(const LinearFunctional& g, double alpha, Vertex y) {
  const double a = g.normal.x;
  const double b = g.normal.y;
  if (a == 0.0 && b == 0.0) throw PreconditionError("cell_meets_line: zero functional");
  // Range of g over the closed cell; its ends are attained inside the
  // half-open cell only when the minimizing (maximizing) corner lies on the
  // included lower-left faces.
  const double lo = a * (y.x + (a >= 0.0 ? -0.5 : 0.5)) + b * (y.y + (b >= 0.0 ? -0.5 : 0.5));
  const double hi = a * (y.x + (a >= 0.0 ? 0.5 : -0.5)) + b * (y.y + (b >= 0.0 ? 0.5 : -0.5));
  const bool lo_included = a >= 0.0 && b >= 0.0;
  const bool hi_included = a <= 0.0 && b <= 0.0;
  const bool above_lo = lo < alpha || (lo == alpha && lo_included);
  const bool below_hi = alpha < hi || (alpha == hi && hi_included);
  return above_lo && below_hi;
}

std::vector<Vertex> discretize_line(const LinearFunctional& g, double alpha, const DomainBox& box) {
  const double a = g.normal.x;
  const double b = g.normal.y;
  if (a == 0.0 && b == 0.0) throw PreconditionError("discretize_line: zero functional");
  std::vector<Vertex> out;
  // Scan the coordinate with the smaller coefficient and solve for the other.
  const bool solve_for_x = std::abs(a) >= std::abs(b);
  const double main = solve_for_x ? a : b;
  const double other = solve_for_x ? b : a;
  const int scan_lo = solve_for_x ? box.min_y() : box.min_x();
  const int scan_hi = solve_for_x ? box.max_y() : box.max_x();
  const int solve_lo = solve_for_x ? box.min_x() : box.min_y();
  const int solve_hi = solve_for_x ? box.max_x() : box.max_y();
  for (int s = scan_lo; s <= scan_hi; ++s) {
    const double t1 = (alpha - other * (s - 0.5)) / main;
    const double t2 = (alpha - other * (s + 0.5)) / main;
    const int from = std::max(solve_lo, static_cast<int>(std::floor(std::min(t1, t2))) - 1);
    const int to = std::min(solve_hi, static_cast<int>(std::ceil(std::max(t1, t2))) + 1);
    for (int t = from; t <= to; ++t) {
      const Vertex y = solve_for_x ? Vertex{t, s} : Vertex{s, t};
      if (cell_meets_line(g, alpha, y)) out.push_back(y);
    }
  }
  if (out.empty()) {
    throw EmptyTargetError("discretize_line: line g = " + std::to_string(alpha) + " misses the box");
  }
  std::sort(out.begin(), out.end());
  return out;
}

Vec2 ShapeEstimate::boundary_point(std::size_t i) const {
  return (1.0 / ghat.at(i)) * unit_vector(realized.at(i));
}

std::optional<std::size_t> ShapeEstimate::index_of(double theta, double tol) const {
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (angle_distance(directions[i], theta) <= tol) return i;
  }
  return std::nullopt;
}

std::vector<double> angle_grid(int steps_per_half_turn) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * steps_per_half_turn));
  for (int j = 0; j < 2 * steps_per_half_turn; ++j) {
    out.push_back(std::numbers::pi * j / steps_per_half_turn);
  }
  return out;
}

ShapeEstimate make_mock_shape(const std::function<double(double)>& gauge, const std::vector<double>& directions) {
  ShapeEstimate s;
  s.directions = directions;
  s.realized = directions;
  for (double t : directions) {
    s.ghat.push_back(gauge(t));
    s.stderr_ghat.push_back(0.0);
  }
  s.law = "analytic";
  s.full_circle = is_uniform_circle(directions);
  return s;
}

ShapeEstimate disk_shape(int steps_per_half_turn) {
  return make_mock_shape([](double) { return 1.0; }, angle_grid(steps_per_half_turn));
}

ShapeEstimate l1_ball_shape(int steps_per_half_turn) {
  return make_mock_shape([](double t) { return std::abs(std::cos(t)) + std::abs(std::sin(t)); },
                         angle_grid(steps_per_half_turn));
}

ShapeEstimate estimate_g(const DistributionConfig& config, const std::vector<double>& directions, int n,
                         int replicas, std::uint64_t seed, unsigned threads) {
  if (n < 8) throw PreconditionError("estimate_g: n must be >= 8");
  if (replicas < 2) throw PreconditionError("estimate_g: replicas must be >= 2");
  if (directions.empty()) throw PreconditionError("estimate_g: no directions");
  config.validate();

  const int half_width = static_cast<int>(std::ceil(4.0 * n / 3.0)) + 1;
  const DomainBox box(half_width);
  std::vector<Vertex> targets;
  for (double t : directions) {
    targets.push_back({static_cast<int>(std::lround(n * std::cos(t))), static_cast<int>(std::lround(n * std::sin(t)))});
  }

  const std::size_t k = directions.size();
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(replicas), std::vector<double>(k));
  std::vector<int> touches(static_cast<std::size_t>(replicas), 0);
  parallel_for(static_cast<std::size_t>(replicas), threads, [&](std::size_t r) {
    const WeightField field(config, hashing::replica_seed(seed, r));
    const EdgeWeights weights(field, box);
    const Vertex origin[1] = {{0, 0}};
    const PassageResult from_origin = sweep(weights, origin);
    for (std::size_t i = 0; i < k; ++i) {
      samples[r][i] = from_origin.dist(targets[i]) / norm2(to_vec(targets[i]));
      if (touches_boundary(from_origin.path_to_source(targets[i]), box)) ++touches[r];
    }
  });

  ShapeEstimate s;
  s.directions = directions;
  s.targets = targets;
  s.n_used = n;
  s.replicas = replicas;
  s.seed = seed;
  s.law = config.describe();
  s.full_circle = is_uniform_circle(directions);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> col(static_cast<std::size_t>(replicas));
    for (std::size_t r = 0; r < col.size(); ++r) col[r] = samples[r][i];
    const MeanEstimate m = summarize(col);
    s.realized.push_back(wrap_angle(std::atan2(targets[i].y, targets[i].x)));
    s.ghat.push_back(m.mean);
    s.stderr_ghat.push_back(m.std_error);
  }
  for (int t : touches) s.boundary_touches += t;
  return s;
}

SupportingFunctional supporting_functional(const ShapeEstimate& shape, double theta) {
  const auto found = shape.index_of(theta);
  if (!found) throw RangeError("supporting_functional: angle " + std::to_string(theta) + " is not on the shape grid");
  const std::size_t i = *found;
  const std::size_t k = shape.size();
  if (k < 3 || (!shape.full_circle && (i == 0 || i + 1 == k))) {
    throw RangeError("supporting_functional: shape does not cover a neighborhood of the angle");
  }
  const std::size_t prev = (i + k - 1) % k;
  const std::size_t next = (i + 1) % k;
  const Vec2 p = shape.boundary_point(i);
  const Vec2 tangent = shape.boundary_point(next) - shape.boundary_point(prev);

  SupportingFunctional out;
  Vec2 normal{tangent.y, -tangent.x};
  const double scale = dot(normal, p);
  if (norm2(tangent) < 1e-12 || !(scale > 1e-12 * norm2(normal) * norm2(p))) {
    // Radial fallback: only a supporting choice for shapes symmetric about
    // this direction.
    out.used_fallback = true;
    normal = shape.ghat[i] * unit_vector(shape.realized[i]);
  } else {
    normal = (1.0 / scale) * normal;
  }
  out.functional.normal = {normal.x + 0.0, normal.y + 0.0};  // no negative zeros
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) excess = std::max(excess, out.functional(shape.boundary_point(j)) - 1.0);
  out.max_excess = excess;
  return out;
}

bool AngleInterval::contains(double theta, double tol) const {
  const double span = wrap_angle(hi - lo);
  const double off = wrap_angle(theta - lo);
  return off <= span + tol || kTwoPi - off <= tol;
}

double AngleInterval::width() const { return wrap_angle(hi - lo); }

namespace {

// Largest run of grid indices around `center` where pred holds.
AngleInterval grow_interval(const ShapeEstimate& shape, std::size_t center, const std::function<bool(std::size_t)>& pred) {
  const std::size_t k = shape.size();
  std::size_t lo = center;
  std::size_t hi = center;
  std::size_t taken = 1;
  while (taken < k) {
    if (!shape.full_circle && lo == 0) break;
    const std::size_t cand = (lo + k - 1) % k;
    if (!pred(cand)) break;
    lo = cand;
    ++taken;
  }
  while (taken < k) {
    if (!shape.full_circle && hi + 1 == k) break;
    const std::size_t cand = (hi + 1) % k;
    if (!pred(cand)) break;
    hi = cand;
    ++taken;
  }
  return {shape.directions[lo], shape.directions[hi]};
}

}  // namespace

AngleInterval sector_I_theta(const ShapeEstimate& shape, double theta, std::optional<double> tol) {
  const SupportingFunctional sf = supporting_functional(shape, theta);
  const std::size_t i = *shape.index_of(theta);
  double t = 1e-9;
  if (tol) {
    t = *tol;
  } else if (shape.stderr_ghat[i] > 0.0) {
    t = 2.0 * shape.stderr_ghat[i] / shape.ghat[i];
  }
  return grow_interval(shape, i, [&](std::size_t j) {
    return std::abs(sf.functional(shape.boundary_point(j)) - 1.0) <= t;
  });
}

AngleInterval sector_J_rho(const ShapeEstimate& shape, Vec2 rho, double tol) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < shape.size(); ++j) {
    if (dot(rho, shape.boundary_point(j)) > dot(rho, shape.boundary_point(best))) best = j;
  }
  return grow_interval(shape, best, [&](std::size_t j) { return std::abs(dot(rho, shape.boundary_point(j)) - 1.0) <= tol; });
}

ShapeEstimate symmetrize_lattice(const ShapeEstimate& shape) {
  if (shape.targets.empty()) return shape;
  std::map<Vertex, std::size_t> where;
  for (std::size_t i = 0; i < shape.size(); ++i) where.emplace(shape.targets[i], i);
  ShapeEstimate out = shape;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const Vertex t = shape.targets[i];
    const Vertex images[8] = {{t.x, t.y},   {-t.x, t.y},  {t.x, -t.y},  {-t.x, -t.y},
                              {t.y, t.x},   {-t.y, t.x},  {t.y, -t.x},  {-t.y, -t.x}};
    std::set<std::size_t> orbit;
    for (Vertex v : images) {
      const auto it = where.find(v);
      if (it != where.end()) orbit.insert(it->second);
    }
    double g = 0.0;
    double se = 0.0;
    for (std::size_t j : orbit) {
      g += shape.ghat[j];
      se += shape.stderr_ghat[j];
    }
    out.ghat[i] = g / static_cast<double>(orbit.size());
    out.stderr_ghat[i] = se / static_cast<double>(orbit.size());
  }
  return out;
}

ShapeDiagnostics diagnose_shape(const ShapeEstimate& shape) {
  ShapeDiagnostics d;
  d.c1 = *std::min_element(shape.ghat.begin(), shape.ghat.end());
  d.c2 = *std::max_element(shape.ghat.begin(), shape.ghat.end());
  const std::size_t k = shape.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (const auto j = shape.index_of(shape.directions[i] + std::numbers::pi / 2)) {
      const double se = combined_se(shape.stderr_ghat[i], shape.stderr_ghat[*j]);
      if (std::abs(shape.ghat[i] - shape.ghat[*j]) > 3.0 * se + 1e-12) ++d.symmetry_violations;
    }
    if (!shape.full_circle && (i == 0 || i + 1 == k)) continue;
    const Vec2 a = shape.boundary_point((i + k - 1) % k);
    const Vec2 b = shape.boundary_point((i + 1) % k);
    const Vec2 p = shape.boundary_point(i);
    const Vec2 chord = b - a;
    if (norm2(chord) == 0.0) continue;
    const double inward = cross(chord, p - a) / norm2(chord);
    const double radial_se = norm2(p) * shape.stderr_ghat[i] / shape.ghat[i];
    if (inward > 3.0 * radial_se + 1e-12) ++d.convexity_violations;
  }
  return d;
}

}  // namespace fpp
