#include "fpp/weight_field.hpp"

#include <cmath>
#include <sstream>

namespace fpp {

std::string to_string(Law law) {
  switch (law) {
    case Law::kExponential: return "exponential";
    case Law::kUniform: return "uniform";
    case Law::kShiftedBernoulli: return "shifted-bernoulli";
  }
  return "unknown";
}

Law law_from_string(const std::string& name) {
  if (name == "exponential") return Law::kExponential;
  if (name == "uniform") return Law::kUniform;
  if (name == "shifted-bernoulli") return Law::kShiftedBernoulli;
  throw ConfigError("unknown law '" + name + "' (expected exponential, uniform or shifted-bernoulli)");
}

void DistributionConfig::validate() const {
  auto fail = [this](const std::string& what) { throw ConfigError(to_string(law) + ": " + what); };
  auto finite = [](double v) { return std::isfinite(v); };
  switch (law) {
    case Law::kExponential:
      if (!finite(p1) || p1 <= 0.0) fail("rate must be > 0");
      // -log(2^-53) / rate must stay below kMaxWeight.
      if (53.0 * std::log(2.0) / p1 > kMaxWeight) fail("rate too small, support exceeds the weight ceiling");
      break;
    case Law::kUniform:
      if (!finite(p1) || !finite(p2)) fail("bounds must be finite");
      if (p1 < 0.0) fail("lo must be >= 0");
      if (p1 > p2) fail("lo must be <= hi");
      if (p2 <= 0.0) fail("weights identically zero are not allowed");
      if (p2 > kMaxWeight) fail("hi exceeds the weight ceiling");
      break;
    case Law::kShiftedBernoulli: {
      if (!finite(p1) || p1 < 0.0 || p1 > 1.0) fail("p must lie in [0,1]");
      if (!finite(p2) || !finite(p3) || p2 < 0.0 || p3 < 0.0) fail("values must be finite and >= 0");
      if (p2 > kMaxWeight || p3 > kMaxWeight) fail("values exceed the weight ceiling");
      const double p_zero = (p2 == 0.0 ? 1.0 - p1 : 0.0) + (p3 == 0.0 ? p1 : 0.0);
      if (p_zero >= 0.5) fail("P(weight = 0) must be < 1/2");
      break;
    }
  }
}

bool DistributionConfig::is_continuous() const {
  return law == Law::kExponential || (law == Law::kUniform && p1 < p2);
}

double DistributionConfig::mean() const {
  switch (law) {
    case Law::kExponential: return 1.0 / p1;
    case Law::kUniform: return 0.5 * (p1 + p2);
    case Law::kShiftedBernoulli: return (1.0 - p1) * p2 + p1 * p3;
  }
  return 0.0;
}

double DistributionConfig::variance() const {
  switch (law) {
    case Law::kExponential: return 1.0 / (p1 * p1);
    case Law::kUniform: return (p2 - p1) * (p2 - p1) / 12.0;
    case Law::kShiftedBernoulli: return p1 * (1.0 - p1) * (p3 - p2) * (p3 - p2);
  }
  return 0.0;
}

double DistributionConfig::cdf(double w) const {
  switch (law) {
    case Law::kExponential: return w <= 0.0 ? 0.0 : -std::expm1(-p1 * w);
    case Law::kUniform:
      if (w < p1) return 0.0;
      if (w >= p2) return 1.0;
      return (w - p1) / (p2 - p1);
    case Law::kShiftedBernoulli: {
      double c = 0.0;
      if (w >= p2) c += 1.0 - p1;
      if (w >= p3) c += p1;
      return c;
    }
  }
  return 0.0;
}

double DistributionConfig::inverse_cdf(double u) const {
  switch (law) {
    case Law::kExponential: return -std::log1p(-u) / p1;
    case Law::kUniform: return p1 + (p2 - p1) * u;
    case Law::kShiftedBernoulli: return u < p1 ? p3 : p2;
  }
  return 0.0;
}

std::string DistributionConfig::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (law) {
    case Law::kExponential: os << "exponential(rate=" << p1 << ")"; break;
    case Law::kUniform: os << "uniform(lo=" << p1 << ",hi=" << p2 << ")"; break;
    case Law::kShiftedBernoulli: os << "shifted-bernoulli(p=" << p1 << ",a=" << p2 << ",b=" << p3 << ")"; break;
  }
  return os.str();
}

namespace hashing {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t edge_hash(std::uint64_t seed, int x, int y, Axis axis) {
  const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
                            static_cast<std::uint64_t>(static_cast<std::uint32_t>(y));
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ key);
  h = mix64(h ^ (static_cast<std::uint64_t>(axis) + 1));
  return h;
}

std::uint64_t replica_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base ^ 0xd1b54a32d192ed03ULL) + index * 0x9e3779b97f4a7c15ULL);
}

}  // namespace hashing

double quantize_weight(double w) {
  return std::ldexp(std::floor(std::ldexp(w, kWeightFractionBits)), -kWeightFractionBits);
}

WeightField::WeightField(DistributionConfig config, std::uint64_t seed, Vertex origin_shift)
    : config_(config), seed_(seed), origin_shift_(origin_shift) {
  config_.validate();
}

double WeightField::weight(EdgeId e) const {
  const Vertex b = e.base + origin_shift_;
  const double u = hashing::to_unit(hashing::edge_hash(seed_, b.x, b.y, e.axis));
  return quantize_weight(config_.inverse_cdf(u));
}

WeightField create_field(const DistributionConfig& config, std::uint64_t seed) {
  return WeightField(config, seed);
}

}  // namespace fpp
