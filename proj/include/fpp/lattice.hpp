#pragma once

// Basic lattice vocabulary for Z^2: vertices, canonical edges, and the
// finite square domains every computation is truncated to.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpp {

struct Vertex {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
  friend constexpr Vertex operator+(Vertex a, Vertex b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vertex operator-(Vertex a, Vertex b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vertex operator-(Vertex a) { return {-a.x, -a.y}; }
};

inline constexpr Vertex kE1{1, 0};
inline constexpr Vertex kE2{0, 1};

inline int l1_norm(Vertex v) { return std::abs(v.x) + std::abs(v.y); }

std::string to_string(Vertex v);

enum class Axis : std::uint8_t { kE1 = 0, kE2 = 1 };

inline constexpr Vertex unit(Axis a) { return a == Axis::kE1 ? kE1 : kE2; }

// The undirected edge {base, base + unit(axis)}.
struct EdgeId {
  Vertex base;
  Axis axis = Axis::kE1;

  friend constexpr auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

// Canonical id of the nearest-neighbor edge between u and v.
// Throws std::invalid_argument if u and v are not adjacent.
EdgeId edge_between(Vertex u, Vertex v);

// The four lattice directions in the fixed order used for neighbor scans
// and out-edge bitmasks: +e1, +e2, -e1, -e2.
inline constexpr Vertex kNeighborOffsets[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

// Square domain [c - N, c + N]^2 intersected with Z^2. Vertices are
// addressed row-major by a dense index so per-vertex data lives in vectors.
class DomainBox {
 public:
  DomainBox() = default;
  explicit DomainBox(int half_width, Vertex center = {0, 0});

  int half_width() const { return half_width_; }
  Vertex center() const { return center_; }
  int side() const { return 2 * half_width_ + 1; }
  std::size_t size() const { return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side()); }

  int min_x() const { return center_.x - half_width_; }
  int max_x() const { return center_.x + half_width_; }
  int min_y() const { return center_.y - half_width_; }
  int max_y() const { return center_.y + half_width_; }

  bool contains(Vertex v) const {
    return v.x >= min_x() && v.x <= max_x() && v.y >= min_y() && v.y <= max_y();
  }
  bool contains(const DomainBox& inner) const {
    return contains(Vertex{inner.min_x(), inner.min_y()}) && contains(Vertex{inner.max_x(), inner.max_y()});
  }
  bool on_boundary(Vertex v) const {
    return contains(v) && (v.x == min_x() || v.x == max_x() || v.y == min_y() || v.y == max_y());
  }

  std::size_t index(Vertex v) const {
    return static_cast<std::size_t>(v.y - min_y()) * static_cast<std::size_t>(side()) +
           static_cast<std::size_t>(v.x - min_x());
  }
  Vertex vertex(std::size_t idx) const {
    const auto s = static_cast<std::size_t>(side());
    return {min_x() + static_cast<int>(idx % s), min_y() + static_cast<int>(idx / s)};
  }

  DomainBox translated(Vertex v) const { return DomainBox(half_width_, center_ + v); }

  // All vertices in index order.
  std::vector<Vertex> vertices() const;

  friend bool operator==(const DomainBox&, const DomainBox&) = default;

 private:
  int half_width_ = 1;
  Vertex center_{};
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Raised when a structure that must be a forest (or a potential that must be
// consistent) is not. Never expected under continuous laws.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fpp
