#include "fpp/mu_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpp/parallel.hpp"

namespace fpp {

AlphaGrid::AlphaGrid(double n_, double h_, double offset_) : n(n_), h(h_), offset(offset_) {
  if (!(n > 0.0) || !(h > 0.0) || !std::isfinite(n) || !std::isfinite(h) || !std::isfinite(offset)) {
    throw PreconditionError("AlphaGrid: n and h must be positive and finite");
  }
  const double k = n / h;
  if (k < 1.0 - 1e-9 || std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
    throw PreconditionError("AlphaGrid: h = " + std::to_string(h) + " must divide n = " + std::to_string(n));
  }
}

std::vector<double> AlphaGrid::values() const {
  const auto k = static_cast<long>(std::llround(n / h));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k));
  for (long j = 0; j < k; ++j) out.push_back(offset + h * (static_cast<double>(j) + 0.5));
  return out;
}

AveragedIncrements average_increments(const WeightField& field, const LinearFunctional& functional,
                                      const AlphaGrid& grid, const DomainBox& domain, const DomainBox& window,
                                      bool keep_per_alpha) {
  const std::vector<double> alphas = grid.values();
  for (double alpha : alphas) require_line_beyond_window(functional, alpha, domain, window);
  const EdgeWeights weights(field, domain);

  AveragedIncrements out;
  out.grid = grid;
  out.seed = field.seed();
  IncrementConfiguration& fbar = out.fbar;
  fbar.window = window;
  fbar.functional = functional;
  fbar.averaged = true;
  fbar.theta1.assign(window.size(), 0.0);
  fbar.theta2.assign(window.size(), 0.0);
  for (double alpha : alphas) {
    const std::vector<Vertex> targets = discretize_line(functional, alpha, domain);
    IncrementConfiguration inc = increments_from_potential(sweep(weights, targets), functional, alpha, window);
    for (std::size_t i = 0; i < window.size(); ++i) {
      fbar.theta1[i] += inc.theta1[i];
      fbar.theta2[i] += inc.theta2[i];
    }
    if (keep_per_alpha) out.per_alpha.push_back(std::move(inc));
  }
  const double count = static_cast<double>(alphas.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    fbar.theta1[i] /= count;
    fbar.theta2[i] /= count;
  }
  return out;
}

namespace {

void require_in_window(const IncrementConfiguration& inc, Vertex x, Vertex y) {
  if (!inc.window.contains(x) || !inc.window.contains(y)) {
    throw RangeError("reconstruct_f: " + to_string(x) + " or " + to_string(y) + " outside the window");
  }
}

// Adds the increments of the straight run from `from` along one axis to
// coordinate `to_coord`.
double run_sum(const IncrementConfiguration& inc, Vertex& cur, Axis axis, int to_coord) {
  double sum = 0.0;
  const Vertex step = unit(axis);
  int& c = axis == Axis::kE1 ? cur.x : cur.y;
  while (c < to_coord) {
    sum += inc.theta(cur, axis);
    cur = cur + step;
  }
  while (c > to_coord) {
    cur = cur - step;
    sum -= inc.theta(cur, axis);
  }
  return sum;
}

}  // namespace

double reconstruct_f(const IncrementConfiguration& inc, Vertex x, Vertex y) {
  require_in_window(inc, x, y);
  Vertex cur = x;
  double sum = run_sum(inc, cur, Axis::kE1, y.x);
  sum += run_sum(inc, cur, Axis::kE2, y.y);
  return sum;
}

double reconstruct_f(const AveragedIncrements& inc, Vertex x, Vertex y) { return reconstruct_f(inc.fbar, x, y); }

double reconstruct_f_transposed(const IncrementConfiguration& inc, Vertex x, Vertex y) {
  require_in_window(inc, x, y);
  Vertex cur = x;
  double sum = run_sum(inc, cur, Axis::kE2, y.y);
  sum += run_sum(inc, cur, Axis::kE1, y.x);
  return sum;
}

std::vector<double> reconstruct_field(const IncrementConfiguration& inc, Vertex origin) {
  const DomainBox& w = inc.window;
  if (!w.contains(origin)) throw RangeError("reconstruct_field: origin outside the window");
  std::vector<double> out(w.size(), 0.0);
  // Row of the origin first, then every column away from that row; each
  // running sum matches the staircase order of reconstruct_f.
  for (int x = origin.x + 1; x <= w.max_x(); ++x) {
    out[w.index({x, origin.y})] = out[w.index({x - 1, origin.y})] + inc.theta({x - 1, origin.y}, Axis::kE1);
  }
  for (int x = origin.x - 1; x >= w.min_x(); --x) {
    out[w.index({x, origin.y})] = out[w.index({x + 1, origin.y})] - inc.theta({x, origin.y}, Axis::kE1);
  }
  for (int x = w.min_x(); x <= w.max_x(); ++x) {
    for (int y = origin.y + 1; y <= w.max_y(); ++y) {
      out[w.index({x, y})] = out[w.index({x, y - 1})] + inc.theta({x, y - 1}, Axis::kE2);
    }
    for (int y = origin.y - 1; y >= w.min_y(); --y) {
      out[w.index({x, y})] = out[w.index({x, y + 1})] - inc.theta({x, y}, Axis::kE2);
    }
  }
  return out;
}

std::vector<double> alpha_breakpoints(const LinearFunctional& functional, double lo, double hi,
                                      const DomainBox& box) {
  if (!(lo <= hi)) throw PreconditionError("alpha_breakpoints: need lo <= hi");
  const double a = functional.normal.x;
  const double b = functional.normal.y;
  std::vector<double> out{lo, hi};
  // Cell corners sit at half-integer coordinates.
  const int i_lo = a == 0.0 ? 0 : box.min_x() - 1;
  const int i_hi = a == 0.0 ? 0 : box.max_x();
  const int j_lo = b == 0.0 ? 0 : box.min_y() - 1;
  const int j_hi = b == 0.0 ? 0 : box.max_y();
  for (int i = i_lo; i <= i_hi; ++i) {
    for (int j = j_lo; j <= j_hi; ++j) {
      const double v = a * (i + 0.5) + b * (j + 0.5);
      if (lo < v && v < hi) out.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Constant pieces of alpha -> L_alpha-hat over [a, b], as (signed length,
// target indices) pairs.
struct LinePieces {
  std::vector<double> length;
  std::vector<std::vector<std::size_t>> targets;

  LinePieces(const LinearFunctional& functional, double a, double b, const DomainBox& box) {
    const double sign = a <= b ? 1.0 : -1.0;
    const std::vector<double> cuts = alpha_breakpoints(functional, std::min(a, b), std::max(a, b), box);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      std::vector<std::size_t> idx;
      for (Vertex v : discretize_line(functional, mid, box)) idx.push_back(box.index(v));
      length.push_back(sign * (cuts[k + 1] - cuts[k]));
      targets.push_back(std::move(idx));
    }
  }

  double integrate(const std::vector<double>& dist) const {
    double total = 0.0;
    for (std::size_t k = 0; k < length.size(); ++k) total += length[k] * line_min(dist, k);
    return total;
  }

  double line_min(const std::vector<double>& dist, std::size_t k) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : targets[k]) best = std::min(best, dist[i]);
    return best;
  }

  std::size_t argmin(const std::vector<double>& dist, std::size_t k) const {
    std::size_t best = targets[k].front();
    for (std::size_t i : targets[k]) {
      if (dist[i] < dist[best]) best = i;
    }
    return best;
  }
};

}  // namespace

double integrate_line_minimum(const PassageResult& potential, const LinearFunctional& functional, double a,
                              double b) {
  return LinePieces(functional, a, b, potential.box()).integrate(potential.dist_values());
}

IdentityReport check_mean_identity(const DistributionConfig& config, const LinearFunctional& functional, Vertex x,
                                   double n, int replicas, std::uint64_t seed, unsigned threads, int half_width) {
  config.validate();
  if (!(n > 0.0)) throw PreconditionError("check_mean_identity: n must be positive");
  if (replicas < 2) throw PreconditionError("check_mean_identity: replicas must be >= 2");
  const double c = functional(x);
  const double reach = std::max({std::abs(n + c), std::abs(c), n});
  if (half_width <= 0) {
    const double d = reach / norm2(functional.normal) + std::max(std::abs(x.x), std::abs(x.y));
    half_width = static_cast<int>(std::ceil(4.0 * d / 3.0)) + 4;
  }
  const DomainBox box(half_width);
  if (!box.contains(-x)) throw PreconditionError("check_mean_identity: -x outside the domain");

  const LinePieces bulk(functional, 0.0, n, box);
  const LinePieces far_end(functional, n, n + c, box);
  const LinePieces near_end(functional, 0.0, c, box);
  const LinePieces outermost(functional, std::max(n, n + c), std::max(n, n + c) + 1e-6, box);

  std::vector<double> lhs(static_cast<std::size_t>(replicas));
  std::vector<double> rhs(lhs.size());
  std::vector<double> paired(lhs.size());
  std::vector<int> flagged(lhs.size(), 0);
  parallel_for(lhs.size(), threads, [&](std::size_t r) {
    const WeightField field(config, hashing::replica_seed(seed, r));
    const EdgeWeights weights(field, box);
    const Vertex origin[1] = {{0, 0}};
    const Vertex shifted[1] = {-x};
    const PassageResult from_origin = sweep(weights, origin);
    const PassageResult from_shifted = sweep(weights, shifted);
    const std::vector<double>& d0 = from_origin.dist_values();
    lhs[r] = (bulk.integrate(from_shifted.dist_values()) - bulk.integrate(d0)) / n;
    rhs[r] = (far_end.integrate(d0) - near_end.integrate(d0)) / n;
    paired[r] = lhs[r] - rhs[r];
    const Vertex end = box.vertex(outermost.argmin(d0, 0));
    flagged[r] = touches_boundary(from_origin.path_to_source(end), box) ? 1 : 0;
  });

  IdentityReport rep;
  rep.x = x;
  rep.n = n;
  rep.g_x = c;
  rep.half_width = half_width;
  rep.replicas = replicas;
  rep.seed = seed;
  rep.lhs = summarize(lhs);
  rep.rhs = summarize(rhs);
  rep.paired = summarize(paired);
  rep.combined_se = combined_se(rep.lhs.std_error, rep.rhs.std_error);
  const double gap = std::abs(rep.lhs.mean - rep.rhs.mean);
  rep.agree = rep.combined_se > 0.0 ? gap <= 3.0 * rep.combined_se : gap <= 1e-12 * std::max(1.0, std::abs(c));
  rep.drift = std::abs(rep.lhs.mean - c);
  for (int f : flagged) rep.boundary_flags += f;
  return rep;
}

RhoGeometry rho_geometry(const LinearFunctional& functional, int window_half_width, const RhoOptions& options) {
  if (window_half_width < 1) throw PreconditionError("rho_geometry: window half width must be >= 1");
  const double norm = norm2(functional.normal);
  if (!(norm > 0.0)) throw PreconditionError("rho_geometry: zero functional");
  const int grown = window_half_width + 1;
  const double g_max = (std::abs(functional.normal.x) + std::abs(functional.normal.y)) * grown;
  const int margin = options.margin > 0 ? options.margin : std::max(window_half_width / 2, 8);
  const double alpha0 = g_max + norm * margin;
  RhoGeometry geo{DomainBox(1), DomainBox(window_half_width), AlphaGrid(options.alpha_span, options.h, alpha0)};
  const double reach = (alpha0 + options.alpha_span) / norm;
  geo.domain = DomainBox(std::max(grown + 2, static_cast<int>(std::ceil(4.0 * reach / 3.0)) + 2));
  return geo;
}

Vec2 rho_from_increments(const IncrementConfiguration& inc, int n_radial) {
  const Vertex o{0, 0};
  return {reconstruct_f(inc, o, {n_radial, 0}) / n_radial, reconstruct_f(inc, o, {0, n_radial}) / n_radial};
}

RhoEstimate estimate_rho(const DistributionConfig& config, const LinearFunctional& functional, int replicas,
                         std::uint64_t seed, const RhoOptions& options, unsigned threads) {
  config.validate();
  if (replicas < 2) throw PreconditionError("estimate_rho: replicas must be >= 2");
  if (options.n_radial < 1) throw PreconditionError("estimate_rho: n_radial must be >= 1");
  const int w = options.n_radial;
  const RhoGeometry geo = rho_geometry(functional, std::max(w, options.window_half_width), options);

  std::vector<Vec2> per(static_cast<std::size_t>(replicas));
  std::vector<double> diag(per.size());
  std::vector<IncrementConfiguration> kept(options.keep_increments ? per.size() : 0);
  parallel_for(per.size(), threads, [&](std::size_t r) {
    const WeightField field(config, hashing::replica_seed(seed, r));
    const AveragedIncrements avg = average_increments(field, functional, geo.grid, geo.domain, geo.window);
    per[r] = rho_from_increments(avg.fbar, w);
    diag[r] = reconstruct_f(avg.fbar, {0, 0}, {w, w}) / w;
    if (options.keep_increments) kept[r] = avg.fbar;
  });

  std::vector<double> e1(per.size());
  std::vector<double> e2(per.size());
  std::vector<double> defect(per.size());
  for (std::size_t r = 0; r < per.size(); ++r) {
    e1[r] = per[r].x;
    e2[r] = per[r].y;
    defect[r] = diag[r] - per[r].x - per[r].y;
  }
  RhoEstimate est;
  const MeanEstimate m1 = summarize(e1);
  const MeanEstimate m2 = summarize(e2);
  est.rho = {m1.mean, m2.mean};
  est.std_error = {m1.std_error, m2.std_error};
  est.rho_diagonal = summarize(diag);
  est.linearity_defect = summarize(defect);
  est.n_radial = w;
  est.replicas = replicas;
  est.seed = seed;
  est.functional = functional;
  est.geometry = geo;
  est.per_replica = std::move(per);
  est.increments = std::move(kept);
  return est;
}

ResidualStats shape_residual(const IncrementConfiguration& inc, Vec2 rho, const std::vector<int>& ladder) {
  if (ladder.empty()) throw PreconditionError("shape_residual: empty ladder");
  const int r_max = *std::max_element(ladder.begin(), ladder.end());
  const DomainBox& w = inc.window;
  if (*std::min_element(ladder.begin(), ladder.end()) < 2 || !w.contains(DomainBox(r_max))) {
    throw PreconditionError("shape_residual: window must contain the l1 ball of radius " + std::to_string(r_max));
  }
  const std::vector<double> f = reconstruct_field(inc, {0, 0});
  ResidualStats stats;
  for (int r : ladder) {
    AnnulusResidual a;
    a.r = r;
    double sum = 0.0;
    for (int y = -r; y <= r; ++y) {
      for (int x = -r; x <= r; ++x) {
        const Vertex v{x, y};
        const int l1 = l1_norm(v);
        if (2 * l1 < r || l1 > r) continue;
        const double res = std::abs(f[w.index(v)] - dot(to_vec(v), rho)) / l1;
        a.max = std::max(a.max, res);
        sum += res;
        ++a.points;
      }
    }
    a.mean = sum / static_cast<double>(a.points);
    stats.annuli.push_back(a);
  }
  stats.max_nonincreasing = true;
  for (std::size_t k = 1; k < stats.annuli.size(); ++k) {
    if (stats.annuli[k].max > stats.annuli[k - 1].max) stats.max_nonincreasing = false;
  }
  return stats;
}

namespace {

bool within(double diff, double se, double k = 3.0) {
  return se > 0.0 ? std::abs(diff) <= k * se : std::abs(diff) <= 1e-9;
}

}  // namespace

SupportingLineReport supporting_line_check(Vec2 rho, Vec2 rho_se, const ShapeEstimate& shape, double theta) {
  const auto found = shape.index_of(theta);
  if (!found) throw RangeError("supporting_line_check: angle " + std::to_string(theta) + " is not on the shape grid");
  const std::size_t i = *found;
  SupportingLineReport rep;
  rep.theta = theta;

  const double gi = shape.ghat[i];
  const double si = shape.stderr_ghat[i];
  const Vec2 vi = unit_vector(shape.realized[i]);
  const double rv = dot(rho, vi);
  rep.dot = rv / gi;
  const double se_rv = std::hypot(vi.x * rho_se.x, vi.y * rho_se.y);
  rep.dot_se = std::hypot(se_rv / gi, rv * si / (gi * gi));
  rep.dot_ok = within(rep.dot - 1.0, rep.dot_se);

  for (std::size_t j = 0; j < shape.size(); ++j) {
    const Vec2 v = unit_vector(shape.realized[j]);
    const double se = std::hypot(shape.stderr_ghat[j], std::hypot(v.x * rho_se.x, v.y * rho_se.y));
    const double excess = dot(rho, v) - shape.ghat[j];
    rep.max_domination_excess = std::max(rep.max_domination_excess, excess);
    if (excess > 3.0 * se + 1e-12) ++rep.domination_violations;
  }

  const SupportingFunctional sf = supporting_functional(shape, theta);
  rep.tangent_degenerate = sf.used_fallback;
  rep.functional_normal = sf.functional.normal;
  // Delta method over the three estimates entering the tangent fit.
  const std::size_t k = shape.size();
  double var_x = 0.0;
  double var_y = 0.0;
  for (std::size_t j : {(i + k - 1) % k, i, (i + 1) % k}) {
    if (shape.stderr_ghat[j] == 0.0) continue;
    ShapeEstimate bumped = shape;
    bumped.ghat[j] += shape.stderr_ghat[j];
    const Vec2 moved = supporting_functional(bumped, theta).functional.normal;
    var_x += std::pow(moved.x - sf.functional.normal.x, 2);
    var_y += std::pow(moved.y - sf.functional.normal.y, 2);
  }
  rep.normal_se = {std::sqrt(var_x), std::sqrt(var_y)};
  rep.normal_ok = within(rho.x - rep.functional_normal.x, std::hypot(rho_se.x, rep.normal_se.x)) &&
                  within(rho.y - rep.functional_normal.y, std::hypot(rho_se.y, rep.normal_se.y));
  return rep;
}

}  // namespace fpp
