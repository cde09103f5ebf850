#include "fpp/geodesic_graph.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace fpp {

namespace {

int direction_of(Vertex from, Vertex to) {
  const Vertex d = to - from;
  for (int dir = 0; dir < 4; ++dir) {
    if (kNeighborOffsets[dir] == d) return dir;
  }
  return -1;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  // False when a and b were already joined.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

}  // namespace

GeodesicGraph GeodesicGraph::from_forward(const DomainBox& box, std::span<const std::pair<Vertex, Vertex>> edges,
                                          std::span<const Vertex> targets) {
  GeodesicGraph g;
  g.box_ = box;
  g.targets_.assign(targets.begin(), targets.end());
  g.is_target_.assign(box.size(), 0);
  g.dist_.assign(box.size(), 0.0);
  g.out_mask_.assign(box.size(), 0);
  g.forward_.assign(box.size(), kNoParent);
  g.forward_weight_.assign(box.size(), 0.0);
  for (Vertex t : targets) g.is_target_[box.index(t)] = 1;
  for (const auto& [tail, head] : edges) {
    const int dir = direction_of(tail, head);
    if (dir < 0 || !box.contains(tail) || !box.contains(head)) {
      throw PreconditionError("from_forward: edge " + to_string(tail) + "->" + to_string(head) + " is not an in-box lattice edge");
    }
    const std::size_t idx = box.index(tail);
    g.out_mask_[idx] = static_cast<std::uint8_t>(1u << dir);
    g.forward_[idx] = static_cast<std::int32_t>(box.index(head));
    g.forward_weight_[idx] = 1.0;
  }
  return g;
}

int GeodesicGraph::out_degree(Vertex v) const { return std::popcount(out_mask_[box_.index(v)]); }

bool GeodesicGraph::has_edge(Vertex from, Vertex to) const {
  const int dir = direction_of(from, to);
  if (dir < 0 || !box_.contains(from)) return false;
  return (out_mask_[box_.index(from)] >> dir) & 1u;
}

std::optional<Vertex> GeodesicGraph::next(Vertex v) const {
  const std::int32_t f = forward_[box_.index(v)];
  if (f == kNoParent) return std::nullopt;
  return box_.vertex(static_cast<std::size_t>(f));
}

GeodesicGraph build_graph(const EdgeWeights& weights, std::span<const Vertex> targets, double rel_tol) {
  const PassageResult potential = sweep(weights, targets);
  const DomainBox& box = weights.box();
  GeodesicGraph g;
  g.box_ = box;
  g.targets_ = potential.sources();
  g.is_target_.assign(box.size(), 0);
  for (Vertex t : g.targets_) g.is_target_[box.index(t)] = 1;
  g.dist_ = potential.dist_values();
  g.out_mask_.assign(box.size(), 0);
  g.forward_ = potential.parent_indices();
  g.forward_weight_.assign(box.size(), 0.0);
  for (std::size_t idx = 0; idx < box.size(); ++idx) {
    if (g.is_target_[idx]) continue;
    const Vertex x = box.vertex(idx);
    std::uint8_t mask = 0;
    for (int dir = 0; dir < 4; ++dir) {
      const Vertex y = x + kNeighborOffsets[dir];
      if (!box.contains(y)) continue;
      const double dy = g.dist_[box.index(y)];
      const double w = weights.toward(idx, dir);
      if (dy <= g.dist_[idx] && close_relative(dy + w, g.dist_[idx], rel_tol)) mask |= static_cast<std::uint8_t>(1u << dir);
    }
    g.out_mask_[idx] = mask;
    if (g.forward_[idx] != kNoParent) {
      g.forward_weight_[idx] = weights.between(x, box.vertex(static_cast<std::size_t>(g.forward_[idx])));
    }
  }
  return g;
}

GeodesicGraph build_graph(const WeightField& field, std::span<const Vertex> targets, const DomainBox& box,
                          double rel_tol) {
  return build_graph(EdgeWeights(field, box), targets, rel_tol);
}

GraphStructureReport check_structure(const GeodesicGraph& graph, const EdgeWeights& weights, double rel_tol) {
  GraphStructureReport r;
  const DomainBox& box = graph.box();
  DisjointSets sets(box.size());
  for (std::size_t idx = 0; idx < box.size(); ++idx) {
    const Vertex x = box.vertex(idx);
    ++r.vertices_checked;
    if (!graph.is_target(x) && graph.out_degree(x) != 1) ++r.out_degree_violations;
    for (int dir = 0; dir < 4; ++dir) {
      if (!((graph.out_mask(idx) >> dir) & 1u)) continue;
      const Vertex y = x + kNeighborOffsets[dir];
      if (!close_relative(graph.dist(x), graph.dist(y) + weights.toward(idx, dir), rel_tol)) ++r.potential_violations;
      // An antiparallel pair is one undirected edge; count it from the lower index.
      if (graph.has_edge(y, x) && box.index(y) < idx) continue;
      if (!sets.unite(idx, box.index(y))) ++r.undirected_circuits;
    }
  }
  return r;
}

GeodesicPath forward_path(const GeodesicGraph& graph, Vertex x) {
  const DomainBox& box = graph.box();
  if (!box.contains(x)) throw RangeError("forward_path: " + to_string(x) + " outside the domain");
  GeodesicPath path;
  path.vertices.push_back(x);
  std::vector<std::uint8_t> seen(box.size(), 0);
  seen[box.index(x)] = 1;
  Vertex cur = x;
  while (!graph.is_target(cur)) {
    const auto nxt = graph.next(cur);
    if (!nxt) break;
    path.total_time += graph.next_weight(cur);
    cur = *nxt;
    if (seen[box.index(cur)]) throw StructuralError("forward_path: revisit at " + to_string(cur));
    seen[box.index(cur)] = 1;
    path.vertices.push_back(cur);
  }
  return path;
}

CoalescenceResult coalescence(const GeodesicGraph& graph, Vertex x, Vertex y) {
  CoalescenceResult out;
  const GeodesicPath px = forward_path(graph, x);
  const GeodesicPath py = forward_path(graph, y);
  out.exited_domain = touches_boundary(px, graph.box()) || touches_boundary(py, graph.box());
  std::unordered_map<std::size_t, int> step_on_x;
  step_on_x.reserve(px.vertices.size() * 2);
  for (std::size_t i = 0; i < px.vertices.size(); ++i) {
    step_on_x.emplace(graph.box().index(px.vertices[i]), static_cast<int>(i));
  }
  for (std::size_t j = 0; j < py.vertices.size(); ++j) {
    const auto it = step_on_x.find(graph.box().index(py.vertices[j]));
    if (it != step_on_x.end()) {
      out.merged = true;
      out.merge_vertex = py.vertices[j];
      out.steps_x = it->second;
      out.steps_y = static_cast<int>(j);
      return out;
    }
  }
  out.steps_x = static_cast<int>(px.vertices.size()) - 1;
  out.steps_y = static_cast<int>(py.vertices.size()) - 1;
  return out;
}

BackwardCluster backward_cluster(const GeodesicGraph& graph, Vertex x, std::size_t cap) {
  const DomainBox& box = graph.box();
  if (!box.contains(x)) throw RangeError("backward_cluster: " + to_string(x) + " outside the domain");
  BackwardCluster out;
  std::deque<Vertex> queue{x};
  out.members.push_back(x);
  if (box.on_boundary(x)) out.truncated = true;
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop_front();
    const auto target = static_cast<std::int32_t>(box.index(v));
    for (Vertex off : kNeighborOffsets) {
      const Vertex u = v + off;
      if (!box.contains(u) || graph.next_index(box.index(u)) != target) continue;
      if (out.members.size() >= cap) {
        out.truncated = true;
        return out;
      }
      out.members.push_back(u);
      if (box.on_boundary(u)) out.truncated = true;
      queue.push_back(u);
    }
  }
  return out;
}

EventReportAmn check_Amn(const GeodesicGraph& graph, int m, int n) {
  if (m < 0 || n < m) throw PreconditionError("check_Amn: need 0 <= m <= n");
  const DomainBox& box = graph.box();
  if (!box.contains(Vertex{-n, -n}) || !box.contains(Vertex{n, n})) {
    throw PreconditionError("check_Amn: [-n,n]^2 must lie inside the domain");
  }
  EventReportAmn r;
  r.m = m;
  r.n = n;
  auto in_outer = [n](Vertex v) { return std::abs(v.x) <= n && std::abs(v.y) <= n; };
  auto in_inner = [m](Vertex v) { return std::abs(v.x) <= m && std::abs(v.y) <= m; };
  auto step = [&](Vertex v) -> std::optional<Vertex> {
    const auto nx = graph.next(v);
    if (nx && in_outer(*nx)) return nx;
    return std::nullopt;
  };

  std::vector<Vertex> inner;
  for (int y = -m; y <= m; ++y) {
    for (int x = -m; x <= m; ++x) inner.push_back({x, y});
  }

  // 1: one forward neighbor inside [-n,n]^2.
  r.out_degree_ok = std::all_of(inner.begin(), inner.end(), [&](Vertex v) { return step(v).has_value(); });

  // 2: the undirected graph restricted to [-m,m]^2 is acyclic.
  {
    const DomainBox local(std::max(m, 1));
    DisjointSets sets(local.size());
    r.no_circuit_ok = true;
    for (Vertex v : inner) {
      const auto nx = graph.next(v);
      if (!nx || !in_inner(*nx)) continue;
      if (!sets.unite(local.index(v), local.index(*nx))) r.no_circuit_ok = false;
    }
  }

  // 3: on a forest, two truncated forward paths share a vertex iff they end
  // at the same vertex, so compare endpoints.
  {
    std::optional<Vertex> common;
    r.coalesce_ok = true;
    for (Vertex v : inner) {
      Vertex cur = v;
      std::size_t guard = 0;
      while (auto nx = step(cur)) {
        cur = *nx;
        if (++guard > box.size()) throw StructuralError("check_Amn: forward cycle");
      }
      if (!common) {
        common = cur;
      } else if (*common != cur) {
        r.coalesce_ok = false;
        break;
      }
    }
  }

  // 4: no forward path from the boundary of [-n,n]^2 enters [-m,m]^2.
  {
    const DomainBox outer(std::max(n, 1));
    enum : std::uint8_t { kUnknown, kHits, kMisses };
    std::vector<std::uint8_t> memo(outer.size(), kUnknown);
    auto hits_inner = [&](Vertex z) {
      std::vector<Vertex> chain;
      Vertex cur = z;
      std::uint8_t verdict = kMisses;
      for (;;) {
        const std::uint8_t known = memo[outer.index(cur)];
        if (known != kUnknown) {
          verdict = known;
          break;
        }
        chain.push_back(cur);
        if (in_inner(cur)) {
          verdict = kHits;
          break;
        }
        const auto nx = step(cur);
        if (!nx) break;
        cur = *nx;
        if (chain.size() > outer.size()) throw StructuralError("check_Amn: forward cycle");
      }
      for (Vertex c : chain) memo[outer.index(c)] = verdict;
      return verdict == kHits;
    };
    r.no_boundary_backflow_ok = true;
    for (int t = -n; t <= n && r.no_boundary_backflow_ok; ++t) {
      for (Vertex z : {Vertex{-n, t}, Vertex{n, t}, Vertex{t, -n}, Vertex{t, n}}) {
        if (hits_inner(z)) {
          r.no_boundary_backflow_ok = false;
          break;
        }
      }
    }
  }
  return r;
}

Vertex lattice_direction(int j) {
  static constexpr Vertex dirs[8] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  return dirs[((j % 8) + 8) % 8];
}

Vertex transverse_direction(int j) {
  const Vertex w = lattice_direction(j);
  return {-w.y, w.x};
}

ProgenitorResult progenitor(const GeodesicGraph& graph, Vertex x, int direction_index, std::size_t cap) {
  const BackwardCluster cluster = backward_cluster(graph, x, cap);
  ProgenitorResult out;
  if (cluster.truncated) {
    out.truncated = true;
    return out;
  }
  const Vertex w = lattice_direction(direction_index);
  const Vertex s = transverse_direction(direction_index);
  auto key = [&](Vertex y) { return std::pair{w.x * y.x + w.y * y.y, s.x * y.x + s.y * y.y}; };
  out.progenitor = *std::min_element(cluster.members.begin(), cluster.members.end(),
                                     [&](Vertex a, Vertex b) { return key(a) < key(b); });
  return out;
}

std::vector<Vertex> encounter_points(const GeodesicGraph& graph, const DomainBox& window) {
  if (!graph.box().contains(window)) throw PreconditionError("encounter_points: window must lie inside the domain");
  const std::size_t n = window.size();
  std::vector<std::int32_t> parent(n, kNoParent);
  std::vector<std::vector<std::uint32_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nx = graph.next(window.vertex(i));
    if (nx && window.contains(*nx)) {
      parent[i] = static_cast<std::int32_t>(window.index(*nx));
      children[window.index(*nx)].push_back(static_cast<std::uint32_t>(i));
    }
  }
  // Boundary counts per subtree, accumulated leaves-first from each root.
  std::vector<long> below(n, 0);
  std::vector<std::size_t> root_of(n, 0);
  std::vector<long> tree_total(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (parent[r] != kNoParent) continue;
    std::vector<std::size_t> order{r};
    for (std::size_t k = 0; k < order.size(); ++k) {
      for (std::uint32_t c : children[order[k]]) order.push_back(c);
      if (order.size() > n) throw StructuralError("encounter_points: forward cycle inside the window");
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      below[*it] += window.on_boundary(window.vertex(*it)) ? 1 : 0;
      if (parent[*it] != kNoParent) below[static_cast<std::size_t>(parent[*it])] += below[*it];
      root_of[*it] = r;
    }
    tree_total[r] = below[r];
  }
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < n; ++i) {
    int components = 0;
    for (std::uint32_t c : children[i]) components += below[c] > 0 ? 1 : 0;
    if (parent[i] != kNoParent && tree_total[root_of[i]] - below[i] > 0) ++components;
    if (components >= 3) out.push_back(window.vertex(i));
  }
  return out;
}

long graph_symmetric_difference(const GeodesicGraph& g1, const GeodesicGraph& g2, const DomainBox& window) {
  if (!g1.box().contains(window) || !g2.box().contains(window)) {
    throw PreconditionError("graph_symmetric_difference: window must lie inside both domains");
  }
  long count = 0;
  for (Vertex x : window.vertices()) {
    for (Vertex off : kNeighborOffsets) {
      const Vertex y = x + off;
      if (!window.contains(y)) continue;
      if (g1.has_edge(x, y) != g2.has_edge(x, y)) ++count;
    }
  }
  return count;
}

}  // namespace fpp
