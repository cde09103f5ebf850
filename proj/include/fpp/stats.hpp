#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace fpp {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

// Sample mean with the standard error of the mean (Welford accumulation).
inline MeanEstimate summarize(std::span<const double> xs) {
  MeanEstimate out;
  double m = 0.0;
  double s = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double d = x - m;
    m += d / static_cast<double>(k);
    s += d * (x - m);
  }
  out.mean = m;
  out.count = k;
  out.std_error = k > 1 ? std::sqrt(s / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
  return out;
}

inline double combined_se(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace fpp
