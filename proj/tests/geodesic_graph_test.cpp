#include <algorithm>
#include <deque>
#include <set>

#include "doctest.h"

#include "fpp/geodesic_graph.hpp"
#include "fpp/line_geometry.hpp"

using namespace fpp;

namespace {

const DistributionConfig kExp = DistributionConfig::exponential(1.0);
const LinearFunctional kAxis{{1.0, 0.0}};

using Edge = std::pair<Vertex, Vertex>;

GeodesicGraph random_graph(std::uint64_t seed, int half_width, double alpha) {
  const DomainBox box(half_width);
  const EdgeWeights w(WeightField(kExp, seed), box);
  return build_graph(w, discretize_line(kAxis, alpha, box));
}

// Pieces of v's tree (undirected forward forest inside the window) left
// after deleting v, counting only those that touch the window boundary.
int boundary_components_without(const GeodesicGraph& g, const DomainBox& window, Vertex v) {
  std::vector<std::vector<std::size_t>> adj(window.size());
  for (Vertex a : window.vertices()) {
    const auto b = g.next(a);
    if (!b || !window.contains(*b) || a == v || *b == v) continue;
    adj[window.index(a)].push_back(window.index(*b));
    adj[window.index(*b)].push_back(window.index(a));
  }
  std::vector<std::size_t> starts;
  for (Vertex off : kNeighborOffsets) {
    const Vertex u = v + off;
    if (window.contains(u) && (g.next(u) == v || g.next(v) == u)) starts.push_back(window.index(u));
  }
  std::vector<char> seen(window.size(), 0);
  seen[window.index(v)] = 1;
  int count = 0;
  for (std::size_t s : starts) {
    if (seen[s]) continue;
    bool boundary = false;
    std::deque<std::size_t> q{s};
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop_front();
      boundary = boundary || window.on_boundary(window.vertex(u));
      for (std::size_t t : adj[u]) {
        if (!seen[t]) {
          seen[t] = 1;
          q.push_back(t);
        }
      }
    }
    count += boundary ? 1 : 0;
  }
  return count;
}

}  // namespace

TEST_CASE("structure of the graph toward a line") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DomainBox box(40);
    const EdgeWeights w(WeightField(kExp, hashing::replica_seed(3, seed)), box);
    const GeodesicGraph g = build_graph(w, discretize_line(kAxis, 25.0, box));
    const GraphStructureReport r = check_structure(g, w);
    REQUIRE(r.out_degree_violations == 0);
    REQUIRE(r.undirected_circuits == 0);
    REQUIRE(r.potential_violations == 0);
    for (Vertex x : DomainBox(8).vertices()) {
      const GeodesicPath p = forward_path(g, x);
      REQUIRE(g.is_target(p.vertices.back()));
      REQUIRE(p.total_time == g.dist(x) - g.dist(p.vertices.back()));
      REQUIRE(path_time(w.field(), p.vertices) == p.total_time);
    }
  }
}

TEST_CASE("unit weights: ties resolved lexicographically") {
  const DomainBox box(6);
  const EdgeWeights w(WeightField(DistributionConfig::constant(1.0), 1), box);
  const GeodesicGraph g = build_graph(w, discretize_line(kAxis, 3.0, box));
  // Beyond the line every vertex steps back toward it; before it, forward.
  CHECK(g.next({5, 2}) == Vertex{4, 2});
  CHECK(g.next({-2, 2}) == Vertex{-1, 2});
  CHECK(g.out_degree({-2, 2}) == 1);
  CHECK(g.next({3, 0}) == std::nullopt);
  CHECK(check_structure(g, w).potential_violations == 0);
  const EventReportAmn a = check_Amn(g, 1, 2);
  CHECK(a.no_circuit_ok);
  CHECK(a.out_degree_ok);
}

TEST_CASE("forward paths and the suffix property") {
  const GeodesicGraph g = random_graph(5, 30, 20.0);
  const GeodesicPath px = forward_path(g, {-10, 4});
  CHECK(forward_path(g, {3, 3}).vertices.size() >= 1);
  for (std::size_t i = 0; i < px.vertices.size(); i += 3) {
    const GeodesicPath py = forward_path(g, px.vertices[i]);
    REQUIRE(std::equal(py.vertices.begin(), py.vertices.end(), px.vertices.begin() + static_cast<long>(i)));
  }
  const Vertex t = g.targets().front();
  CHECK(forward_path(g, t).vertices == std::vector<Vertex>{t});
}

TEST_CASE("coalescence of paths") {
  const GeodesicGraph g = random_graph(6, 30, 20.0);
  const CoalescenceResult same = coalescence(g, {1, 2}, {1, 2});
  CHECK(same.merged);
  CHECK(same.merge_vertex == Vertex{1, 2});
  CHECK(same.steps_x == 0);
  CHECK(same.steps_y == 0);

  const GeodesicPath p = forward_path(g, {-5, -5});
  const Vertex on = p.vertices[p.vertices.size() / 2];
  const CoalescenceResult suffix = coalescence(g, {-5, -5}, on);
  CHECK(suffix.merged);
  CHECK(suffix.merge_vertex == on);
  CHECK(suffix.steps_y == 0);
}

TEST_CASE("backward clusters") {
  const std::vector<Edge> chain = {{{-1, 0}, {0, 0}}, {{0, 0}, {1, 0}}};
  const Vertex targets[1] = {{1, 0}};
  const GeodesicGraph g = GeodesicGraph::from_forward(DomainBox(3), chain, targets);
  const BackwardCluster leaf = backward_cluster(g, {-1, 0}, 100);
  CHECK(leaf.members == std::vector<Vertex>{{-1, 0}});
  CHECK_FALSE(leaf.truncated);
  CHECK(backward_cluster(g, {1, 0}, 100).members.size() == 3);

  const GeodesicGraph r = random_graph(8, 40, 30.0);
  for (Vertex x : DomainBox(5).vertices()) {
    const BackwardCluster c = backward_cluster(r, x, 1u << 20);
    if (c.truncated) continue;
    int in_neighbors = 0;
    for (Vertex off : kNeighborOffsets) in_neighbors += r.next(x + off) == x;
    REQUIRE(static_cast<int>(c.members.size()) >= 1 + in_neighbors);
    // Independent membership: y is in C_x iff x is on Gamma_y.
    for (Vertex y : c.members) {
      const auto& path = forward_path(r, y).vertices;
      REQUIRE(std::find(path.begin(), path.end(), x) != path.end());
    }
  }
}

TEST_CASE("A_mn conditions") {
  const GeodesicGraph g = random_graph(9, 40, 30.0);
  const EventReportAmn zero = check_Amn(g, 0, 5);
  CHECK(zero.out_degree_ok);
  CHECK(zero.no_circuit_ok);
  CHECK(zero.coalesce_ok);
  CHECK_THROWS_AS(check_Amn(g, 5, 3), PreconditionError);
  CHECK_THROWS_AS(check_Amn(g, 3, 41), PreconditionError);

  // Hand-built: two parallel rows leaving [-1,1]^2 separately.
  std::vector<Edge> rows;
  std::vector<Vertex> targets;
  for (int y = -3; y <= 3; ++y) {
    for (int x = -3; x < 3; ++x) rows.push_back({{x, y}, {x + 1, y}});
    targets.push_back({3, y});
  }
  const GeodesicGraph parallel = GeodesicGraph::from_forward(DomainBox(3), rows, targets);
  const EventReportAmn a = check_Amn(parallel, 1, 2);
  CHECK(a.out_degree_ok);
  CHECK(a.no_circuit_ok);
  CHECK_FALSE(a.coalesce_ok);
  CHECK_FALSE(a.no_boundary_backflow_ok);  // (-2, 0) flows into the inner box
}

TEST_CASE("progenitors") {
  const std::vector<Edge> chain = {{{-1, 0}, {0, 0}}, {{0, 0}, {1, 0}}};
  const Vertex targets[1] = {{1, 0}};
  const GeodesicGraph g = GeodesicGraph::from_forward(DomainBox(3), chain, targets);
  for (int j = 0; j < 8; ++j) {
    CHECK(progenitor(g, {-1, 0}, j).progenitor == Vertex{-1, 0});
  }
  CHECK(progenitor(g, {1, 0}, 0).progenitor == Vertex{-1, 0});

  // Each vertex has at most one progenitor: sum over y of m(x, y) <= 1.
  const GeodesicGraph r = random_graph(10, 30, 20.0);
  const DomainBox box = r.box();
  for (Vertex x : DomainBox(4).vertices()) {
    const ProgenitorResult p = progenitor(r, x, 0);
    if (p.truncated) continue;
    std::vector<Vertex> cluster;
    for (Vertex y : box.vertices()) {
      const auto& path = forward_path(r, y).vertices;
      if (std::find(path.begin(), path.end(), x) != path.end()) cluster.push_back(y);
    }
    // Least in the order (w'.y, s.y) with w' = e1, s = e2.
    int mass = 0;
    for (Vertex y : cluster) {
      bool least = true;
      for (Vertex z : cluster) least = least && (std::pair{y.x, y.y} <= std::pair{z.x, z.y});
      mass += least ? 1 : 0;
      if (least) REQUIRE(p.progenitor == y);
    }
    REQUIRE(mass <= 1);
  }
}

TEST_CASE("encounter points") {
  // A path has none.
  std::vector<Edge> path;
  std::vector<Vertex> end = {{4, 0}};
  for (int x = -4; x < 4; ++x) path.push_back({{x, 0}, {x + 1, 0}});
  const GeodesicGraph line = GeodesicGraph::from_forward(DomainBox(4), path, end);
  CHECK(encounter_points(line, DomainBox(4)).empty());

  // Star with three long arms reaching the boundary; the center is one.
  std::vector<Edge> star;
  for (int k = 1; k <= 4; ++k) {
    star.push_back({{-k, 0}, {-k + 1, 0}});
    star.push_back({{0, k}, {0, k - 1}});
    star.push_back({{0, -k}, {0, -k + 1}});
  }
  const Vertex center[1] = {{0, 0}};
  const GeodesicGraph s = GeodesicGraph::from_forward(DomainBox(4), star, center);
  CHECK(encounter_points(s, DomainBox(4)) == std::vector<Vertex>{{0, 0}});

  // Random graph against deletion-and-count.
  const GeodesicGraph r = random_graph(11, 30, 20.0);
  const DomainBox window(6);
  const std::vector<Vertex> found = encounter_points(r, window);
  const std::set<Vertex> found_set(found.begin(), found.end());
  for (Vertex v : window.vertices()) {
    REQUIRE((boundary_components_without(r, window, v) >= 3) == (found_set.count(v) == 1));
  }
  CHECK(static_cast<long>(found.size()) <= 8L * 6);
}

TEST_CASE("graph differences") {
  const GeodesicGraph a = random_graph(12, 40, 25.0);
  const DomainBox window(10);
  CHECK(graph_symmetric_difference(a, a, window) == 0);

  std::vector<Edge> right;
  std::vector<Edge> up;
  std::vector<Vertex> none;
  for (Vertex v : DomainBox(2).vertices()) {
    if (v.x < 2) right.push_back({v, v + kE1});
    if (v.y < 2) up.push_back({v, v + kE2});
  }
  const GeodesicGraph gr = GeodesicGraph::from_forward(DomainBox(2), right, none);
  const GeodesicGraph gu = GeodesicGraph::from_forward(DomainBox(2), up, none);
  CHECK(graph_symmetric_difference(gr, gu, DomainBox(2)) == static_cast<long>(right.size() + up.size()));
}

TEST_CASE("graphs toward farther lines change less near the origin") {
  const DomainBox window(10);
  double diff[3] = {0, 0, 0};
  const double alphas[3] = {30, 60, 120};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DomainBox box(170);
    const EdgeWeights w(WeightField(kExp, hashing::replica_seed(21, seed)), box);
    for (int k = 0; k < 3; ++k) {
      const GeodesicGraph g1 = build_graph(w, discretize_line(kAxis, alphas[k], box));
      const GeodesicGraph g2 = build_graph(w, discretize_line(kAxis, alphas[k] + 10, box));
      diff[k] += static_cast<double>(graph_symmetric_difference(g1, g2, window));
    }
  }
  MESSAGE("mean symmetric differences: " << diff[0] / 10 << " " << diff[1] / 10 << " " << diff[2] / 10);
  CHECK(diff[2] <= diff[0]);
}
