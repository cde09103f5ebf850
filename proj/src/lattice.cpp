#include "fpp/lattice.hpp"

namespace fpp {

std::string to_string(Vertex v) {
  return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + ")";
}

EdgeId edge_between(Vertex u, Vertex v) {
  const Vertex d = v - u;
  if (d == kE1) return {u, Axis::kE1};
  if (d == -kE1) return {v, Axis::kE1};
  if (d == kE2) return {u, Axis::kE2};
  if (d == -kE2) return {v, Axis::kE2};
  throw std::invalid_argument("edge_between: " + to_string(u) + " and " + to_string(v) + " are not adjacent");
}

DomainBox::DomainBox(int half_width, Vertex center) : half_width_(half_width), center_(center) {
  if (half_width < 1) {
    throw PreconditionError("DomainBox: half width must be >= 1, got " + std::to_string(half_width));
  }
}

std::vector<Vertex> DomainBox::vertices() const {
  std::vector<Vertex> out;
  out.reserve(size());
  for (int y = min_y(); y <= max_y(); ++y) {
    for (int x = min_x(); x <= max_x(); ++x) out.push_back({x, y});
  }
  return out;
}

}  // namespace fpp
