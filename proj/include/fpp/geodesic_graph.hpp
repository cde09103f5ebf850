#pragma once

// Directed geodesic graphs toward a target set and the analytics run on them:
// forward paths, coalescence, backward clusters, the cylinder events A_{m,n},
// progenitors and encounter points.
//
// Two edge sets are kept. `out_mask` is the full graph: every edge <x,y> with
// dist(x) = dist(y) + w(x,y). `forward` keeps one out-edge per vertex, the
// lexicographically smallest predecessor chosen by the sweep. Under
// continuous laws the two coincide almost surely; for discrete laws the
// analytics below operate on the tie-broken forest.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpp/passage.hpp"

namespace fpp {

class GeodesicGraph {
 public:
  // Hand-built graph for fixtures: every (tail, head) pair becomes the unique
  // out-edge of tail with weight 1. Targets have no out-edges.
  static GeodesicGraph from_forward(const DomainBox& box, std::span<const std::pair<Vertex, Vertex>> edges,
                                    std::span<const Vertex> targets);

  const DomainBox& box() const { return box_; }
  const std::vector<Vertex>& targets() const { return targets_; }
  bool is_target(Vertex v) const { return is_target_[box_.index(v)] != 0; }
  double dist(Vertex v) const { return dist_[box_.index(v)]; }

  int out_degree(Vertex v) const;
  bool has_edge(Vertex from, Vertex to) const;
  std::uint8_t out_mask(std::size_t idx) const { return out_mask_[idx]; }

  std::optional<Vertex> next(Vertex v) const;
  std::int32_t next_index(std::size_t idx) const { return forward_[idx]; }
  // Weight of the tie-broken out-edge of v (0 when v has none).
  double next_weight(Vertex v) const { return forward_weight_[box_.index(v)]; }

 private:
  friend GeodesicGraph build_graph(const EdgeWeights& weights, std::span<const Vertex> targets, double rel_tol);

  DomainBox box_;
  std::vector<Vertex> targets_;
  std::vector<std::uint8_t> is_target_;
  std::vector<double> dist_;
  std::vector<std::uint8_t> out_mask_;  // bit d set: edge toward kNeighborOffsets[d]
  std::vector<std::int32_t> forward_;
  std::vector<double> forward_weight_;
};

GeodesicGraph build_graph(const EdgeWeights& weights, std::span<const Vertex> targets, double rel_tol = 1e-12);
GeodesicGraph build_graph(const WeightField& field, std::span<const Vertex> targets, const DomainBox& box,
                          double rel_tol = 1e-12);

struct GraphStructureReport {
  long vertices_checked = 0;
  long out_degree_violations = 0;  // off-target vertices with out-degree != 1
  long undirected_circuits = 0;    // edges closing a cycle in the undirected full graph
  long potential_violations = 0;   // edges with dist(x) != dist(y) + w
};

GraphStructureReport check_structure(const GeodesicGraph& graph, const EdgeWeights& weights, double rel_tol = 1e-12);

// Gamma_x: follows tie-broken out-edges until the target set. total_time is
// the sum of the traversed edge weights. Throws StructuralError on a revisit.
GeodesicPath forward_path(const GeodesicGraph& graph, Vertex x);

struct CoalescenceResult {
  bool merged = false;
  std::optional<Vertex> merge_vertex;
  int steps_x = 0;
  int steps_y = 0;
  bool exited_domain = false;  // either path touched the domain edge
};

CoalescenceResult coalescence(const GeodesicGraph& graph, Vertex x, Vertex y);

struct BackwardCluster {
  std::vector<Vertex> members;
  bool truncated = false;
};

// C_x: vertices with a directed path to x, breadth-first; truncated at `cap`
// members or when the cluster reaches the domain edge.
BackwardCluster backward_cluster(const GeodesicGraph& graph, Vertex x, std::size_t cap);

struct EventReportAmn {
  int m = 0;
  int n = 0;
  bool out_degree_ok = false;
  bool no_circuit_ok = false;
  bool coalesce_ok = false;
  bool no_boundary_backflow_ok = false;
  bool all() const { return out_degree_ok && no_circuit_ok && coalesce_ok && no_boundary_backflow_ok; }
};

// Conditions 1-4 of A_{m,n} on [-m,m]^2 inside [-n,n]^2 (origin centered).
EventReportAmn check_Amn(const GeodesicGraph& graph, int m, int n);

// Direction w' = j*pi/4 scaled to unit sup-norm, and the transverse vector
// s = w' rotated by +pi/2 (smallest integer normal).
Vertex lattice_direction(int j);
Vertex transverse_direction(int j);

struct ProgenitorResult {
  std::optional<Vertex> progenitor;
  bool truncated = false;
};

// Least element of C_x in the order (w'.y, then s.y).
ProgenitorResult progenitor(const GeodesicGraph& graph, Vertex x, int direction_index, std::size_t cap = 1u << 20);

// Vertices whose removal leaves at least three components (of the undirected
// tie-broken forest restricted to the window) that each reach the window
// boundary.
std::vector<Vertex> encounter_points(const GeodesicGraph& graph, const DomainBox& window);

// Directed edges with both endpoints in the window present in exactly one
// of the two full graphs.
long graph_symmetric_difference(const GeodesicGraph& g1, const GeodesicGraph& g2, const DomainBox& window);

}  // namespace fpp
