#include "fpp/passage.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace fpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

EdgeWeights::EdgeWeights(const WeightField& field, const DomainBox& box)
    : field_(field), box_(box), right_(box.size(), kInf), up_(box.size(), kInf) {
  for (int y = box.min_y(); y <= box.max_y(); ++y) {
    for (int x = box.min_x(); x <= box.max_x(); ++x) {
      const std::size_t idx = box.index({x, y});
      if (x < box.max_x()) right_[idx] = field.weight(EdgeId{{x, y}, Axis::kE1});
      if (y < box.max_y()) up_[idx] = field.weight(EdgeId{{x, y}, Axis::kE2});
    }
  }
}

double EdgeWeights::between(Vertex u, Vertex v) const {
  const EdgeId e = edge_between(u, v);
  if (!box_.contains(u) || !box_.contains(v)) throw RangeError("EdgeWeights: edge leaves the box");
  const std::size_t idx = box_.index(e.base);
  return e.axis == Axis::kE1 ? right_[idx] : up_[idx];
}

PassageResult::PassageResult(DomainBox box, std::vector<Vertex> sources, std::vector<double> dist,
                             std::vector<std::int32_t> parent)
    : box_(box),
      sources_(std::move(sources)),
      is_source_(box_.size(), 0),
      dist_(std::move(dist)),
      parent_(std::move(parent)) {
  for (Vertex s : sources_) is_source_[box_.index(s)] = 1;
}

std::optional<Vertex> PassageResult::parent(Vertex v) const {
  const std::int32_t p = parent_.at(box_.index(v));
  if (p == kNoParent) return std::nullopt;
  return box_.vertex(static_cast<std::size_t>(p));
}

GeodesicPath PassageResult::path_to_source(Vertex v) const {
  if (!box_.contains(v)) throw RangeError("path_to_source: " + to_string(v) + " outside the box");
  GeodesicPath path;
  std::size_t idx = box_.index(v);
  path.vertices.push_back(v);
  while (!is_source_[idx]) {
    const std::int32_t p = parent_[idx];
    if (p == kNoParent) throw StructuralError("path_to_source: parent chain ends off the source set");
    idx = static_cast<std::size_t>(p);
    path.vertices.push_back(box_.vertex(idx));
    if (path.vertices.size() > box_.size()) throw StructuralError("path_to_source: parent chain has a cycle");
  }
  path.total_time = dist_[box_.index(v)];
  return path;
}

PassageResult sweep(const EdgeWeights& weights, std::span<const Vertex> sources) {
  const DomainBox& box = weights.box();
  if (sources.empty()) throw PreconditionError("sweep: empty source set");
  std::vector<Vertex> src;
  src.reserve(sources.size());
  for (Vertex s : sources) {
    if (!box.contains(s)) throw RangeError("sweep: source " + to_string(s) + " outside the box");
    src.push_back(s);
  }
  std::sort(src.begin(), src.end());
  src.erase(std::unique(src.begin(), src.end()), src.end());

  const std::size_t n = box.size();
  std::vector<double> dist(n, kInf);
  std::vector<std::int32_t> parent(n, kNoParent);
  std::vector<std::uint8_t> settled(n, 0);
  std::vector<std::uint8_t> is_source(n, 0);

  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (Vertex s : src) {
    const std::size_t idx = box.index(s);
    dist[idx] = 0.0;
    is_source[idx] = 1;
    heap.push({0.0, static_cast<std::uint32_t>(idx)});
  }

  const int side = box.side();
  while (!heap.empty()) {
    const auto [d, uidx] = heap.top();
    heap.pop();
    if (settled[uidx]) continue;
    settled[uidx] = 1;
    const Vertex u = box.vertex(uidx);
    const int lx = u.x - box.min_x();
    const int ly = u.y - box.min_y();
    for (int dir = 0; dir < 4; ++dir) {
      if ((dir == 0 && lx == side - 1) || (dir == 1 && ly == side - 1) || (dir == 2 && lx == 0) ||
          (dir == 3 && ly == 0)) {
        continue;
      }
      const std::size_t vidx = box.index(u + kNeighborOffsets[dir]);
      if (settled[vidx] || is_source[vidx]) continue;
      const double nd = d + weights.toward(uidx, dir);
      if (nd < dist[vidx]) {
        dist[vidx] = nd;
        parent[vidx] = static_cast<std::int32_t>(uidx);
        heap.push({nd, static_cast<std::uint32_t>(vidx)});
      } else if (nd == dist[vidx] && u < box.vertex(static_cast<std::size_t>(parent[vidx]))) {
        parent[vidx] = static_cast<std::int32_t>(uidx);
      }
    }
  }
  return PassageResult(box, std::move(src), std::move(dist), std::move(parent));
}

PassageResult sweep(const WeightField& field, std::span<const Vertex> sources, const DomainBox& box) {
  return sweep(EdgeWeights(field, box), sources);
}

std::pair<double, GeodesicPath> tau_to_set(const EdgeWeights& weights, Vertex x, std::span<const Vertex> targets) {
  if (targets.empty()) throw PreconditionError("tau_to_set: empty target set");
  if (!weights.box().contains(x)) throw RangeError("tau_to_set: " + to_string(x) + " outside the box");
  const PassageResult r = sweep(weights, targets);
  const double d = r.dist(x);
  if (!std::isfinite(d)) throw StructuralError("tau_to_set: target set unreachable");
  return {d, r.path_to_source(x)};
}

std::pair<double, GeodesicPath> tau_to_set(const WeightField& field, Vertex x, std::span<const Vertex> targets,
                                           const DomainBox& box) {
  return tau_to_set(EdgeWeights(field, box), x, targets);
}

std::pair<double, GeodesicPath> tau_point(const EdgeWeights& weights, Vertex x, Vertex y) {
  const Vertex target[1] = {y};
  return tau_to_set(weights, x, target);
}

std::pair<double, GeodesicPath> tau_point(const WeightField& field, Vertex x, Vertex y, const DomainBox& box) {
  return tau_point(EdgeWeights(field, box), x, y);
}

double brute_force_tau(const WeightField& field, Vertex x, Vertex y, const DomainBox& box) {
  if (box.half_width() > kBruteForceMaxHalfWidth) {
    throw PreconditionError("brute_force_tau: box half width " + std::to_string(box.half_width()) +
                            " exceeds the enumeration limit " + std::to_string(kBruteForceMaxHalfWidth));
  }
  if (!box.contains(x) || !box.contains(y)) throw RangeError("brute_force_tau: endpoint outside the box");
  if (x == y) return 0.0;

  std::vector<std::uint8_t> on_path(box.size(), 0);
  double best = kInf;
  // Depth-first enumeration of self-avoiding paths; a prefix that already
  // costs at least the best complete path cannot improve it.
  std::function<void(Vertex, double)> extend = [&](Vertex u, double so_far) {
    if (u == y) {
      best = std::min(best, so_far);
      return;
    }
    for (Vertex off : kNeighborOffsets) {
      const Vertex v = u + off;
      if (!box.contains(v) || on_path[box.index(v)]) continue;
      const double next = so_far + field.weight(u, v);
      if (next >= best) continue;
      on_path[box.index(v)] = 1;
      extend(v, next);
      on_path[box.index(v)] = 0;
    }
  };
  on_path[box.index(x)] = 1;
  extend(x, 0.0);
  return best;
}

double path_time(const WeightField& field, std::span<const Vertex> vertices) {
  double t = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i) t += field.weight(vertices[i - 1], vertices[i]);
  return t;
}

bool touches_boundary(const GeodesicPath& path, const DomainBox& box) {
  return std::any_of(path.vertices.begin(), path.vertices.end(), [&](Vertex v) { return box.on_boundary(v); });
}

bool close_relative(double a, double b, double rel_tol) {
  if (a == b) return true;
  return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<InvariantViolation> check_passage_invariants(const PassageResult& result, const EdgeWeights& weights,
                                                         double rel_tol) {
  std::vector<InvariantViolation> out;
  const DomainBox& box = result.box();
  const auto& dist = result.dist_values();
  for (Vertex s : result.sources()) {
    if (result.dist(s) != 0.0) out.push_back({"passage.source_zero", "dist" + to_string(s) + " != 0"});
  }
  for (std::size_t idx = 0; idx < box.size(); ++idx) {
    const Vertex v = box.vertex(idx);
    for (int dir = 0; dir < 2; ++dir) {
      const Vertex u = v + kNeighborOffsets[dir];
      if (!box.contains(u)) continue;
      const double w = weights.toward(idx, dir);
      const double du = dist[box.index(u)];
      const double dv = dist[idx];
      if (dv > du + w && !close_relative(dv, du + w, rel_tol)) {
        out.push_back({"passage.potential_consistency", "dist" + to_string(v) + " exceeds dist" + to_string(u) + " + w"});
      }
      if (du > dv + w && !close_relative(du, dv + w, rel_tol)) {
        out.push_back({"passage.potential_consistency", "dist" + to_string(u) + " exceeds dist" + to_string(v) + " + w"});
      }
    }
    const std::int32_t p = result.parent_indices()[idx];
    if (result.is_source_index(idx)) continue;
    if (p == kNoParent) {
      out.push_back({"passage.parent_reaches_source", to_string(v) + " has no parent"});
      continue;
    }
    const Vertex pv = box.vertex(static_cast<std::size_t>(p));
    if (!close_relative(dist[idx], dist[static_cast<std::size_t>(p)] + weights.between(v, pv), rel_tol)) {
      out.push_back({"passage.parent_equality", to_string(v) + " -> " + to_string(pv)});
    }
  }
  // Parent chains must terminate in the source set.
  enum : std::uint8_t { kUnknown, kInProgress, kGood, kBad };
  std::vector<std::uint8_t> state(box.size(), kUnknown);
  for (std::size_t start = 0; start < box.size(); ++start) {
    std::vector<std::size_t> chain;
    std::size_t idx = start;
    bool ok = true;
    while (state[idx] != kGood && !result.is_source_index(idx)) {
      if (state[idx] != kUnknown || result.parent_indices()[idx] == kNoParent) {
        ok = false;
        break;
      }
      state[idx] = kInProgress;
      chain.push_back(idx);
      idx = static_cast<std::size_t>(result.parent_indices()[idx]);
    }
    for (std::size_t c : chain) state[c] = ok ? kGood : kBad;
    if (!ok && !chain.empty()) {
      out.push_back({"passage.parent_reaches_source", "chain from " + to_string(box.vertex(start))});
    }
  }
  return out;
}

}  // namespace fpp
