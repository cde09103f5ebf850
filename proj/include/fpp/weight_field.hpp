#pragma once

// i.i.d. edge-weight environments on Z^2, sampled lazily per edge.
//
// Every edge weight is a pure function of (seed, law, edge coordinates +
// origin shift). The 64-bit hash and the inverse-CDF step are documented
// bit-exactly in docs/weight_hash.md; weights are rounded down to the
// dyadic grid 2^-32 so that all passage-time sums are exact in binary64.

#include <cstdint>
#include <string>

#include "fpp/lattice.hpp"

namespace fpp {

enum class Law : std::uint8_t { kExponential, kUniform, kShiftedBernoulli };

std::string to_string(Law law);
Law law_from_string(const std::string& name);

// exponential: p1 = rate.
// uniform: [p1, p2), p1 == p2 allowed as a degenerate constant environment.
// shifted-bernoulli: value p3 with probability p1, p2 otherwise.
struct DistributionConfig {
  Law law = Law::kExponential;
  double p1 = 1.0;
  double p2 = 0.0;
  double p3 = 0.0;

  static DistributionConfig exponential(double rate) { return {Law::kExponential, rate, 0.0, 0.0}; }
  static DistributionConfig uniform(double lo, double hi) { return {Law::kUniform, lo, hi, 0.0}; }
  static DistributionConfig shifted_bernoulli(double p, double a, double b) {
    return {Law::kShiftedBernoulli, p, a, b};
  }
  // Weights identically equal to c (degenerate uniform law).
  static DistributionConfig constant(double c) { return uniform(c, c); }

  // Throws ConfigError on invalid parameters.
  void validate() const;

  // True for laws with a continuous distribution function (unique geodesics
  // almost surely). Discrete and degenerate laws exercise the tie-break.
  bool is_continuous() const;

  double mean() const;
  double variance() const;
  double cdf(double w) const;
  double inverse_cdf(double u) const;

  std::string describe() const;

  friend bool operator==(const DistributionConfig&, const DistributionConfig&) = default;
};

// Largest admissible weight value; keeps every path sum below 2^21 on the
// domains used here so dyadic sums never round.
inline constexpr double kMaxWeight = 1024.0;
inline constexpr int kWeightFractionBits = 32;

namespace hashing {

std::uint64_t mix64(std::uint64_t z);

// Raw 64-bit hash of (seed, x, y, axis).
std::uint64_t edge_hash(std::uint64_t seed, int x, int y, Axis axis);

// 53-bit uniform deviate in [0, 1).
inline double to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Seed of replica i derived from a base seed. Adding replicas never changes
// the seeds of existing ones.
std::uint64_t replica_seed(std::uint64_t base, std::uint64_t index);

}  // namespace hashing

double quantize_weight(double w);

class WeightField {
 public:
  WeightField(DistributionConfig config, std::uint64_t seed, Vertex origin_shift = {0, 0});

  const DistributionConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  Vertex origin_shift() const { return origin_shift_; }

  double weight(EdgeId e) const;
  double weight(Vertex u, Vertex v) const { return weight(edge_between(u, v)); }

  // The environment T_v(omega): shifted_view(v).weight(e) == weight(e - v).
  WeightField shifted_view(Vertex v) const { return WeightField(config_, seed_, origin_shift_ - v); }

 private:
  DistributionConfig config_;
  std::uint64_t seed_;
  Vertex origin_shift_;
};

WeightField create_field(const DistributionConfig& config, std::uint64_t seed);

}  // namespace fpp
