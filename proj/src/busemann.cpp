#include "fpp/busemann.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fpp {

double busemann(const PassageResult& potential, Vertex x, Vertex y) {
  const DomainBox& box = potential.box();
  if (!box.contains(x) || !box.contains(y)) throw RangeError("busemann: argument outside the domain");
  return potential.dist(x) - potential.dist(y);
}

double busemann(const WeightField& field, std::span<const Vertex> targets, Vertex x, Vertex y, const DomainBox& box) {
  return busemann(sweep(field, targets, box), x, y);
}

double IncrementConfiguration::theta(Vertex v, Axis axis) const {
  if (!window.contains(v)) throw RangeError("increment at " + to_string(v) + " outside the window");
  const std::size_t idx = window.index(v);
  return axis == Axis::kE1 ? theta1[idx] : theta2[idx];
}

double IncrementConfiguration::curl(Vertex v) const {
  return theta(v, Axis::kE1) + theta(v + kE1, Axis::kE2) - theta(v + kE2, Axis::kE1) - theta(v, Axis::kE2);
}

double IncrementConfiguration::max_abs_curl() const {
  double worst = 0.0;
  for (int y = window.min_y(); y < window.max_y(); ++y) {
    for (int x = window.min_x(); x < window.max_x(); ++x) worst = std::max(worst, std::abs(curl({x, y})));
  }
  return worst;
}

IncrementConfiguration increments_from_potential(const PassageResult& potential, const LinearFunctional& functional,
                                                 double alpha, const DomainBox& window) {
  const DomainBox& domain = potential.box();
  if (!domain.contains(DomainBox(window.half_width() + 1, window.center()))) {
    throw PreconditionError("increment window (grown by one step) must lie inside the domain");
  }
  IncrementConfiguration inc;
  inc.window = window;
  inc.alpha = alpha;
  inc.functional = functional;
  inc.theta1.resize(window.size());
  inc.theta2.resize(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Vertex v = window.vertex(i);
    inc.theta1[i] = busemann(potential, v, v + kE1);
    inc.theta2[i] = busemann(potential, v, v + kE2);
  }
  return inc;
}

void require_line_beyond_window(const LinearFunctional& functional, double alpha, const DomainBox& domain,
                                const DomainBox& window) {
  const DomainBox grown(window.half_width() + 1, window.center());
  if (!domain.contains(grown)) throw PreconditionError("window (grown by one step) must lie inside the domain");
  const Vertex corners[4] = {{grown.min_x(), grown.min_y()},
                             {grown.max_x(), grown.min_y()},
                             {grown.min_x(), grown.max_y()},
                             {grown.max_x(), grown.max_y()}};
  for (Vertex c : corners) {
    if (!(functional(c) < alpha)) {
      throw PreconditionError("line L_alpha (alpha = " + std::to_string(alpha) + ") reaches the increment window");
    }
  }
  try {
    (void)discretize_line(functional, alpha, grown);
    throw PreconditionError("discretized line L_alpha (alpha = " + std::to_string(alpha) + ") meets the increment window");
  } catch (const EmptyTargetError&) {
  }
}

IncrementConfiguration increment_config(const EdgeWeights& weights, const LinearFunctional& functional, double alpha,
                                        const DomainBox& window) {
  require_line_beyond_window(functional, alpha, weights.box(), window);
  const std::vector<Vertex> targets = discretize_line(functional, alpha, weights.box());
  return increments_from_potential(sweep(weights, targets), functional, alpha, window);
}

IncrementConfiguration increment_config(const WeightField& field, const LinearFunctional& functional, double alpha,
                                        const DomainBox& domain, const DomainBox& window) {
  require_line_beyond_window(functional, alpha, domain, window);
  return increment_config(EdgeWeights(field, domain), functional, alpha, window);
}

namespace {

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

PropertyReport verify_busemann_properties(const WeightField& field, const LinearFunctional& functional,
                                          std::span<const double> alphas, const DomainBox& domain,
                                          const BusemannVerifyOptions& options) {
  PropertyReport report;
  const EdgeWeights weights(field, domain);
  const int wh = options.window_half_width > 0 ? options.window_half_width : std::max(1, domain.half_width() / 2);
  const DomainBox window(wh, domain.center());
  std::mt19937_64 rng(hashing::mix64(field.seed() ^ 0x5bd1e995ULL));
  std::uniform_int_distribution<int> pick_x(window.min_x(), window.max_x());
  std::uniform_int_distribution<int> pick_y(window.min_y(), window.max_y());
  auto random_vertex = [&] { return Vertex{pick_x(rng), pick_y(rng)}; };

  auto note = [&](bool ok) {
    ++report.checks;
    if (!ok) ++report.hard_violations;
  };

  for (double alpha : alphas) {
    const std::vector<Vertex> targets = discretize_line(functional, alpha, domain);
    const PassageResult potential = sweep(weights, targets);

    for (int s = 0; s < options.samples; ++s) {
      const Vertex x = random_vertex();
      const Vertex source[1] = {x};
      const PassageResult from_x = sweep(weights, source);

      for (int k = 0; k < options.pairs_per_sample; ++k) {
        const Vertex y = random_vertex();
        const Vertex z = random_vertex();
        const double gap = rel_gap(busemann(potential, x, y) + busemann(potential, y, z), busemann(potential, x, z));
        report.additivity_max_rel = std::max(report.additivity_max_rel, gap);
        note(gap <= options.additivity_tol);

        const double excess = std::abs(busemann(potential, x, y)) - from_x.dist(y);
        report.bound_max_excess = std::max(report.bound_max_excess, excess);
        note(excess <= options.bound_slack);
      }

      const GeodesicPath geodesic = potential.path_to_source(x);
      if (touches_boundary(geodesic, domain)) {
        ++report.boundary_flagged;
        continue;
      }
      for (Vertex y : geodesic.vertices) {
        const double gap = rel_gap(busemann(potential, x, y), from_x.dist(y));
        report.restriction_max_rel = std::max(report.restriction_max_rel, gap);
        note(gap <= options.restriction_tol);
      }
    }

    // B_S(x,y)(T_e omega) = B_{S-e}(x-e, y-e)(omega), with the domain moved along.
    for (Vertex e : {kE1, kE2}) {
      const WeightField shifted = field.shifted_view(e);
      const PassageResult on_shifted = sweep(EdgeWeights(shifted, domain), targets);
      std::vector<Vertex> moved;
      moved.reserve(targets.size());
      for (Vertex t : targets) moved.push_back(t - e);
      const PassageResult on_original = sweep(EdgeWeights(field, domain.translated(-e)), moved);
      for (int k = 0; k < options.pairs_per_sample; ++k) {
        const Vertex x = random_vertex();
        const Vertex y = random_vertex();
        const double diff = std::abs(busemann(on_shifted, x, y) - busemann(on_original, x - e, y - e));
        report.translation_max_abs = std::max(report.translation_max_abs, diff);
        note(diff == 0.0);
      }
    }
  }
  return report;
}

}  // namespace fpp
