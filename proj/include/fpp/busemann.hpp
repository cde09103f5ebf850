#pragma once

// Busemann functions B_S(x, y) = tau(x, S) - tau(y, S) and their increment
// configurations toward the lines L_alpha.
//
// Every B is read off a single multi-source sweep, i.e. as a difference of
// one potential, so additivity holds exactly.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fpp/line_geometry.hpp"
#include "fpp/passage.hpp"

namespace fpp {

double busemann(const PassageResult& potential, Vertex x, Vertex y);
double busemann(const WeightField& field, std::span<const Vertex> targets, Vertex x, Vertex y, const DomainBox& box);

// theta1(v) = B(v, v + e1), theta2(v) = B(v, v + e2) for v in the window.
struct IncrementConfiguration {
  DomainBox window;
  std::vector<double> theta1;
  std::vector<double> theta2;
  double alpha = std::numeric_limits<double>::quiet_NaN();  // NaN for averaged configurations
  bool averaged = false;
  LinearFunctional functional;

  double theta(Vertex v, Axis axis) const;
  // Sum of increments around the unit square with lower-left corner v.
  double curl(Vertex v) const;
  // Largest |curl| over all unit squares inside the window.
  double max_abs_curl() const;
};

// Increments from an existing potential (sweep toward discretize_line(alpha)).
IncrementConfiguration increments_from_potential(const PassageResult& potential, const LinearFunctional& functional,
                                                 double alpha, const DomainBox& window);

// Throws PreconditionError unless L_alpha lies strictly beyond the window
// (and its discretization avoids the window grown by one step).
void require_line_beyond_window(const LinearFunctional& functional, double alpha, const DomainBox& domain,
                                const DomainBox& window);

IncrementConfiguration increment_config(const EdgeWeights& weights, const LinearFunctional& functional, double alpha,
                                        const DomainBox& window);
IncrementConfiguration increment_config(const WeightField& field, const LinearFunctional& functional, double alpha,
                                        const DomainBox& domain, const DomainBox& window);

struct PropertyReport {
  double additivity_max_rel = 0.0;  // |B(x,y) + B(y,z) - B(x,z)|, relative
  double bound_max_excess = 0.0;    // max(|B(x,y)| - tau(x,y)), <= 0 when satisfied
  double restriction_max_rel = 0.0; // |B(x,y) - tau(x,y)| for y on the geodesic from x
  double translation_max_abs = 0.0; // B on T_e omega vs shifted arguments
  long checks = 0;
  long hard_violations = 0;
  long boundary_flagged = 0;        // geodesics touching the domain edge, excluded
};

struct BusemannVerifyOptions {
  int samples = 5;            // base points x per alpha (each needs its own sweep)
  int pairs_per_sample = 20;  // partner points y, z per base point
  int window_half_width = 0;  // 0: half the domain half width
  double additivity_tol = 1e-9;
  double bound_slack = 1e-12;
  double restriction_tol = 1e-9;
};

PropertyReport verify_busemann_properties(const WeightField& field, const LinearFunctional& functional,
                                          std::span<const double> alphas, const DomainBox& domain,
                                          const BusemannVerifyOptions& options = {});

}  // namespace fpp
