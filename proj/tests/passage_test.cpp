#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"

#include "fpp/passage.hpp"

using namespace fpp;

namespace {

const DistributionConfig kExp = DistributionConfig::exponential(1.0);

std::vector<Vertex> random_set(std::mt19937_64& rng, const DomainBox& box, int count) {
  std::uniform_int_distribution<int> cx(box.min_x(), box.max_x());
  std::uniform_int_distribution<int> cy(box.min_y(), box.max_y());
  std::vector<Vertex> out;
  for (int i = 0; i < count; ++i) out.push_back({cx(rng), cy(rng)});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

TEST_CASE("trivial passage times") {
  const WeightField f(kExp, 1);
  const DomainBox box(5);
  const auto [t, path] = tau_point(f, {2, -1}, {2, -1}, box);
  CHECK(t == 0.0);
  CHECK(path.vertices == std::vector<Vertex>{{2, -1}});

  const std::vector<Vertex> targets = {{0, 0}, {3, 3}};
  const auto [ts, ps] = tau_to_set(f, {3, 3}, targets, box);
  CHECK(ts == 0.0);
  CHECK(ps.vertices.size() == 1);
}

TEST_CASE("unit weights on a 2x2 grid") {
  const WeightField ones(DistributionConfig::constant(1.0), 1);
  const DomainBox box(1);
  CHECK(tau_point(ones, {0, 0}, {1, 1}, box).first == 2.0);
  CHECK(brute_force_tau(ones, {0, 0}, {1, 1}, box) == 2.0);
  CHECK(tau_point(ones, {-1, -1}, {1, 1}, box).first == 4.0);
}

TEST_CASE("engine equals exhaustive enumeration on 5x5 boxes") {
  const DomainBox box(2);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const WeightField f(kExp, hashing::replica_seed(17, seed));
    const EdgeWeights w(f, box);
    for (Vertex x : box.vertices()) {
      const Vertex src[1] = {x};
      const PassageResult r = sweep(w, src);
      for (Vertex y : box.vertices()) REQUIRE(r.dist(y) == brute_force_tau(f, x, y, box));
    }
  }
}

TEST_CASE("point-to-set equals the minimum over exhaustive paths") {
  std::mt19937_64 rng(3);
  const DomainBox box(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WeightField f(kExp, seed);
    const std::vector<Vertex> targets = random_set(rng, box, 3);
    for (Vertex x : box.vertices()) {
      double best = std::numeric_limits<double>::infinity();
      for (Vertex t : targets) best = std::min(best, brute_force_tau(f, x, t, box));
      REQUIRE(tau_to_set(f, x, targets, box).first == best);
    }
    const Vertex single[1] = {targets.front()};
    REQUIRE(tau_to_set(f, {0, 0}, single, box).first == tau_point(f, {0, 0}, targets.front(), box).first);
  }
}

TEST_CASE("symmetry is exact") {
  std::mt19937_64 rng(5);
  const DomainBox box(15);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EdgeWeights w(WeightField(kExp, seed), box);
    const std::vector<Vertex> pts = random_set(rng, box, 100);
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
      REQUIRE(tau_point(w, pts[i], pts[i + 1]).first == tau_point(w, pts[i + 1], pts[i]).first);
    }
  }
}

TEST_CASE("point-to-set subadditivity on 201x201") {
  std::mt19937_64 rng(9);
  const DomainBox box(100);
  const WeightField f(kExp, 2);
  const EdgeWeights w(f, box);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Vertex> s = random_set(rng, box, 1 + trial % 5);
    const std::vector<Vertex> xy = random_set(rng, box, 2);
    if (xy.size() < 2) continue;
    const double xs = tau_to_set(w, xy[0], s).first;
    const double ys = tau_to_set(w, xy[1], s).first;
    const double xyt = tau_point(w, xy[0], xy[1]).first;
    REQUIRE(xs <= xyt + ys);
  }
}

TEST_CASE("multi-source sweep is the minimum of single-source sweeps") {
  const DomainBox box(12);
  const EdgeWeights w(WeightField(kExp, 8), box);
  const std::vector<Vertex> sources = {{-5, 3}, {7, 7}, {0, -11}};
  const PassageResult multi = sweep(w, sources);
  std::vector<PassageResult> singles;
  for (Vertex s : sources) {
    const Vertex one[1] = {s};
    singles.push_back(sweep(w, one));
  }
  for (Vertex v : box.vertices()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : singles) best = std::min(best, r.dist(v));
    REQUIRE(multi.dist(v) == best);
  }
  CHECK(check_passage_invariants(multi, w).empty());
}

TEST_CASE("geodesics realize the distance") {
  const DomainBox box(10);
  const WeightField f(kExp, 4);
  const auto [t, path] = tau_point(f, {-8, 2}, {9, -7}, box);
  CHECK(path.vertices.front() == Vertex{-8, 2});
  CHECK(path.vertices.back() == Vertex{9, -7});
  CHECK(path_time(f, path.vertices) == t);
  CHECK(path.total_time == t);
}

TEST_CASE("ties break toward the smallest predecessor") {
  const WeightField ones(DistributionConfig::constant(1.0), 1);
  const DomainBox box(3);
  const Vertex src[1] = {{0, 0}};
  const PassageResult r = sweep(EdgeWeights(ones, box), src);
  // (1,1) is reached equally fast through (0,1) and (1,0).
  REQUIRE(r.parent({1, 1}).has_value());
  CHECK(*r.parent({1, 1}) == Vertex{0, 1});
  CHECK(r.dist({1, 1}) == 2.0);
}

TEST_CASE("corrupted potentials are detected") {
  const DomainBox box(4);
  const EdgeWeights w(WeightField(kExp, 6), box);
  const Vertex src[1] = {{0, 0}};
  PassageResult r = sweep(w, src);
  REQUIRE(check_passage_invariants(r, w).empty());
  r.mutable_dist_values()[box.index({2, 1})] += 0.25;
  const auto v = check_passage_invariants(r, w);
  REQUIRE_FALSE(v.empty());
  bool named = false;
  for (const auto& i : v) named = named || i.invariant == "passage.potential_consistency";
  CHECK(named);
}

TEST_CASE("preconditions") {
  const WeightField f(kExp, 1);
  CHECK_THROWS_AS(brute_force_tau(f, {0, 0}, {1, 1}, DomainBox(4)), PreconditionError);
  CHECK_THROWS_AS(tau_point(f, {0, 0}, {9, 0}, DomainBox(4)), RangeError);
  const std::vector<Vertex> none;
  CHECK_THROWS(tau_to_set(f, {0, 0}, none, DomainBox(4)));
  GeodesicPath p;
  p.vertices = {{3, 0}, {4, 0}};
  CHECK(touches_boundary(p, DomainBox(4)));
  CHECK_FALSE(touches_boundary(p, DomainBox(5)));
}
