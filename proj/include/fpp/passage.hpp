#pragma once

// Passage times, point-to-set sweeps and geodesics inside a DomainBox.
//
// The engine is a binary-heap label-setting sweep from a source set. Because
// weights live on the dyadic grid 2^-32, every distance is an exact sum and
// does not depend on the order edges are added. Ties between equal-length
// geodesics (only possible for discrete laws) go to the lexicographically
// smallest predecessor vertex.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/weight_field.hpp"

namespace fpp {

// Edge weights of a field materialized over one box. Sweeps over the same
// (field, box) pair reuse this instead of re-hashing every edge.
class EdgeWeights {
 public:
  EdgeWeights(const WeightField& field, const DomainBox& box);

  const DomainBox& box() const { return box_; }
  const WeightField& field() const { return field_; }

  // Weight of the edge from vertex index idx in direction kNeighborOffsets[dir].
  // Caller guarantees the neighbor is inside the box.
  double toward(std::size_t idx, int dir) const {
    const std::size_t s = static_cast<std::size_t>(box_.side());
    switch (dir) {
      case 0: return right_[idx];
      case 1: return up_[idx];
      case 2: return right_[idx - 1];
      default: return up_[idx - s];
    }
  }
  double between(Vertex u, Vertex v) const;

 private:
  WeightField field_;
  DomainBox box_;
  std::vector<double> right_;  // edge (v, v + e1)
  std::vector<double> up_;     // edge (v, v + e2)
};

inline constexpr std::int32_t kNoParent = -1;

struct GeodesicPath {
  std::vector<Vertex> vertices;
  double total_time = 0.0;
};

// Distance potential and shortest-path forest from a source set.
class PassageResult {
 public:
  PassageResult(DomainBox box, std::vector<Vertex> sources, std::vector<double> dist,
                std::vector<std::int32_t> parent);

  const DomainBox& box() const { return box_; }
  const std::vector<Vertex>& sources() const { return sources_; }
  bool is_source(Vertex v) const { return is_source_[box_.index(v)] != 0; }
  bool is_source_index(std::size_t idx) const { return is_source_[idx] != 0; }

  double dist(Vertex v) const { return dist_.at(box_.index(v)); }
  const std::vector<double>& dist_values() const { return dist_; }
  std::vector<double>& mutable_dist_values() { return dist_; }
  std::optional<Vertex> parent(Vertex v) const;
  const std::vector<std::int32_t>& parent_indices() const { return parent_; }

  // Follows parent links from v to the source set.
  GeodesicPath path_to_source(Vertex v) const;

 private:
  DomainBox box_;
  std::vector<Vertex> sources_;
  std::vector<std::uint8_t> is_source_;
  std::vector<double> dist_;
  std::vector<std::int32_t> parent_;
};

// Multi-source sweep. Sources outside the box are rejected.
PassageResult sweep(const EdgeWeights& weights, std::span<const Vertex> sources);
PassageResult sweep(const WeightField& field, std::span<const Vertex> sources, const DomainBox& box);

// tau(x, targets) restricted to in-box paths, with the geodesic from x to the
// target set.
std::pair<double, GeodesicPath> tau_to_set(const WeightField& field, Vertex x, std::span<const Vertex> targets,
                                           const DomainBox& box);
std::pair<double, GeodesicPath> tau_to_set(const EdgeWeights& weights, Vertex x, std::span<const Vertex> targets);

std::pair<double, GeodesicPath> tau_point(const WeightField& field, Vertex x, Vertex y, const DomainBox& box);
std::pair<double, GeodesicPath> tau_point(const EdgeWeights& weights, Vertex x, Vertex y);

// Exhaustive minimum over self-avoiding in-box paths. Refuses boxes with
// half width above kBruteForceMaxHalfWidth.
inline constexpr int kBruteForceMaxHalfWidth = 3;
double brute_force_tau(const WeightField& field, Vertex x, Vertex y, const DomainBox& box);

// Sum of edge weights along consecutive vertices; throws on non-adjacent steps.
double path_time(const WeightField& field, std::span<const Vertex> vertices);

bool touches_boundary(const GeodesicPath& path, const DomainBox& box);

// Named violations of the PassageResult invariants (empty when consistent).
struct InvariantViolation {
  std::string invariant;
  std::string detail;
};
std::vector<InvariantViolation> check_passage_invariants(const PassageResult& result, const EdgeWeights& weights,
                                                         double rel_tol = 1e-12);

bool close_relative(double a, double b, double rel_tol);

}  // namespace fpp
