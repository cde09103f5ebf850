#include "fpp/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <algorithm>
#include <map>
#include <random>

#include "fpp/busemann.hpp"
#include "fpp/geodesic_graph.hpp"
#include "fpp/mu_estimator.hpp"
#include "fpp/parallel.hpp"
#include "fpp/stats.hpp"

#ifndef FPP_VERSION
#define FPP_VERSION "unknown"
#endif

namespace fpp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return FPP_VERSION; }

namespace {

using Meta = std::vector<std::pair<std::string, std::string>>;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(long v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string schema_name(const std::string& name) { return "fpp." + name + "/" + std::to_string(kSchemaVersion); }

std::string describe_functional(const LinearFunctional& g) { return "(" + num(g.normal.x) + "," + num(g.normal.y) + ")"; }

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

struct Context {
  const ExperimentConfig& config;
  RunResult& result;
  unsigned threads;

  Meta meta() const {
    return {{"kind", to_string(config.kind)},
            {"law", config.law.describe()},
            {"seed", num(config.seed)},
            {"replicas", num(config.replicas)}};
  }

  fs::path path(const std::string& name) const { return config.out_dir / name; }

  void note_file(const std::string& name) { result.files.push_back(name); }

  void fail(const std::string& suite, const std::string& invariant, const std::string& detail) {
    result.failures.push_back({suite, invariant, detail});
  }
};

class CsvFile {
 public:
  CsvFile(Context& ctx, const std::string& name, const std::string& schema, const Meta& extra,
          const std::vector<std::string>& columns)
      : out_(ctx.path(name)) {
    if (!out_) throw std::runtime_error("cannot write " + ctx.path(name).string());
    ctx.note_file(name);
    out_ << "# schema: " << schema_name(schema) << "\n";
    for (const auto& [k, v] : ctx.meta()) out_ << "# " << k << ": " << v << "\n";
    for (const auto& [k, v] : extra) out_ << "# " << k << ": " << v << "\n";
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

void write_json(Context& ctx, const std::string& name, const std::string& schema, json body) {
  json doc;
  doc["schema"] = schema_name(schema);
  json meta = json::object();
  for (const auto& [k, v] : ctx.meta()) meta[k] = v;
  doc["meta"] = meta;
  for (auto& [k, v] : body.items()) doc[k] = v;
  std::ofstream out(ctx.path(name));
  if (!out) throw std::runtime_error("cannot write " + ctx.path(name).string());
  out << doc.dump(2) << "\n";
  ctx.note_file(name);
}

std::uint64_t shape_seed(std::uint64_t base) { return hashing::mix64(base ^ 0x5ca1ab1e0ddba11ULL); }

ShapeEstimate shape_for(const ExperimentConfig& c, unsigned threads) {
  return estimate_g(c.law, angle_grid(c.steps_per_half_turn), c.shape_n, c.shape_replicas, shape_seed(c.seed),
                    threads);
}

void write_shape_csv(Context& ctx, const ShapeEstimate& s, const std::string& name) {
  CsvFile csv(ctx, name, "shape", {{"n", num(s.n_used)}, {"shape_replicas", num(s.replicas)}},
              {"theta", "realized", "target_x", "target_y", "ghat", "stderr", "l1_ratio"});
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vertex t = s.targets.empty() ? Vertex{0, 0} : s.targets[i];
    const double l1 = s.targets.empty() ? 0.0 : l1_norm(t) / norm2(to_vec(t));
    csv.row({num(s.directions[i]), num(s.realized[i]), num(t.x), num(t.y), num(s.ghat[i]), num(s.stderr_ghat[i]),
             num(l1)});
  }
}

// ---------------------------------------------------------------- shape

void run_shape(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const std::vector<double> dirs = angle_grid(c.steps_per_half_turn);
  std::vector<double> ns = c.n_values.empty() ? std::vector<double>{64} : c.n_values;
  json points = json::array();
  CsvFile csv(ctx, "shape.csv", "shape", {{"directions", num(dirs.size())}},
              {"n", "theta", "realized", "target_x", "target_y", "ghat", "stderr", "l1_ratio"});
  for (double nd : ns) {
    const int n = static_cast<int>(std::lround(nd));
    const ShapeEstimate s = estimate_g(c.law, dirs, n, c.replicas, c.seed, ctx.threads);
    double max_l1_dev = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double l1 = l1_norm(s.targets[i]) / norm2(to_vec(s.targets[i]));
      max_l1_dev = std::max(max_l1_dev, std::abs(s.ghat[i] - l1));
      csv.row({num(n), num(s.directions[i]), num(s.realized[i]), num(s.targets[i].x), num(s.targets[i].y),
               num(s.ghat[i]), num(s.stderr_ghat[i]), num(l1)});
    }
    const ShapeDiagnostics d = diagnose_shape(s);
    const SupportingFunctional sf = supporting_functional(s, c.theta);
    const AngleInterval sector = sector_I_theta(s, c.theta);
    ctx.result.boundary_flags += s.boundary_touches;
    points.push_back({{"n", n},
                      {"c1", d.c1},
                      {"c2", d.c2},
                      {"symmetry_violations", d.symmetry_violations},
                      {"convexity_violations", d.convexity_violations},
                      {"boundary_touches", s.boundary_touches},
                      {"max_abs_l1_deviation", max_l1_dev},
                      {"ghat_theta", s.ghat[*s.index_of(c.theta)]},
                      {"stderr_theta", s.stderr_ghat[*s.index_of(c.theta)]},
                      {"supporting_normal", vec_json(sf.functional.normal)},
                      {"supporting_fallback", sf.used_fallback},
                      {"supporting_max_excess", sf.max_excess},
                      {"sector_I_theta", {sector.lo, sector.hi}}});
  }
  ctx.result.summary = {{"theta", c.theta}, {"points", points}};
  write_json(ctx, "shape_report.json", "shape-report", ctx.result.summary);
}

// ---------------------------------------------------------------- busemann-verify

void run_busemann(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const LinearFunctional functional = resolve_functional(c);
  const DomainBox domain(c.domain_half_width > 0 ? c.domain_half_width : 100);
  const std::vector<double> alphas = c.alphas.empty() ? std::vector<double>{50, 60, 70} : c.alphas;
  BusemannVerifyOptions opt;
  opt.samples = c.samples;
  opt.pairs_per_sample = c.pairs_per_sample;
  opt.window_half_width = c.window_half_width;
  std::vector<PropertyReport> reports(static_cast<std::size_t>(c.replicas));
  parallel_for(reports.size(), ctx.threads, [&](std::size_t r) {
    const WeightField field(c.law, hashing::replica_seed(c.seed, r));
    reports[r] = verify_busemann_properties(field, functional, alphas, domain, opt);
  });
  CsvFile csv(ctx, "busemann.csv", "busemann",
              {{"domain_half_width", num(domain.half_width())}, {"functional", describe_functional(functional)}},
              {"replica", "checks", "hard_violations", "boundary_flagged", "additivity_max_rel", "bound_max_excess",
               "restriction_max_rel", "translation_max_abs"});
  PropertyReport total;
  total.bound_max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const PropertyReport& p = reports[r];
    csv.row({num(r), num(p.checks), num(p.hard_violations), num(p.boundary_flagged), num(p.additivity_max_rel),
             num(p.bound_max_excess), num(p.restriction_max_rel), num(p.translation_max_abs)});
    total.checks += p.checks;
    total.hard_violations += p.hard_violations;
    total.boundary_flagged += p.boundary_flagged;
    total.additivity_max_rel = std::max(total.additivity_max_rel, p.additivity_max_rel);
    total.bound_max_excess = std::max(total.bound_max_excess, p.bound_max_excess);
    total.restriction_max_rel = std::max(total.restriction_max_rel, p.restriction_max_rel);
    total.translation_max_abs = std::max(total.translation_max_abs, p.translation_max_abs);
  }
  if (total.additivity_max_rel > opt.additivity_tol) ctx.fail("busemann", "busemann.additivity", num(total.additivity_max_rel));
  if (total.bound_max_excess > opt.bound_slack) ctx.fail("busemann", "busemann.bound", num(total.bound_max_excess));
  if (total.restriction_max_rel > opt.restriction_tol) ctx.fail("busemann", "busemann.restriction", num(total.restriction_max_rel));
  if (total.translation_max_abs != 0.0) ctx.fail("busemann", "busemann.translation", num(total.translation_max_abs));
  ctx.result.hard_violations += total.hard_violations;
  ctx.result.boundary_flags += total.boundary_flagged;
  ctx.result.summary = {{"functional", vec_json(functional.normal)},
                        {"alphas", alphas},
                        {"domain_half_width", domain.half_width()},
                        {"checks", total.checks},
                        {"hard_violations", total.hard_violations},
                        {"boundary_flagged", total.boundary_flagged},
                        {"additivity_max_rel", total.additivity_max_rel},
                        {"bound_max_excess", total.bound_max_excess},
                        {"restriction_max_rel", total.restriction_max_rel},
                        {"translation_max_abs", total.translation_max_abs}};
  write_json(ctx, "busemann_report.json", "busemann-report", ctx.result.summary);
}

// ---------------------------------------------------------------- graph-coalescence

// Domain half width leaving room on every side of a line at lattice distance d.
int domain_for_distance(double d, int floor_half_width) {
  return std::max(floor_half_width, static_cast<int>(std::ceil(4.0 * d / 3.0)) + 2);
}

struct GraphSample {
  double fraction = 0.0;
  bool exited = false;
  GraphStructureReport structure;
  long paths_checked = 0;
  long path_violations = 0;
};

void run_graph(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const LinearFunctional functional = resolve_functional(c);
  const double norm = norm2(functional.normal);
  const int b = c.pair_box;
  const DomainBox pair_box(b);
  const double pairs = static_cast<double>(pair_box.size()) * (pair_box.size() - 1) / 2.0;

  CsvFile raw(ctx, "coalescence.csv", "coalescence",
              {{"functional", describe_functional(functional)}, {"pair_box", num(b)}},
              {"n", "alpha", "line_distance", "domain_half_width", "replica", "fraction", "exited_domain"});
  CsvFile curve(ctx, "coalescence_curve.csv", "coalescence-curve",
                {{"functional", describe_functional(functional)}, {"pair_box", num(b)}},
                {"n", "mean", "stderr", "replicas", "exited"});
  json coal = json::array();
  GraphStructureReport structure;
  long paths_checked = 0;
  long path_violations = 0;
  bool forest_written = false;

  for (double n : c.n_values) {
    const double alpha = n;
    const double distance = alpha / norm;
    const int half = c.domain_half_width > 0 ? c.domain_half_width : static_cast<int>(std::ceil(2.0 * distance)) + 2;
    const DomainBox domain(half);
    require_line_beyond_window(functional, alpha, domain, pair_box);
    const std::vector<Vertex> targets = discretize_line(functional, alpha, domain);
    std::vector<GraphSample> samples(static_cast<std::size_t>(c.replicas));
    std::vector<std::vector<std::string>> forest_rows;
    parallel_for(samples.size(), ctx.threads, [&](std::size_t r) {
      const WeightField field(c.law, hashing::replica_seed(c.seed, r));
      const EdgeWeights weights(field, domain);
      const GeodesicGraph g = build_graph(weights, targets);
      GraphSample& s = samples[r];
      s.structure = check_structure(g, weights);
      std::map<std::size_t, long> classes;
      for (Vertex v : pair_box.vertices()) {
        const GeodesicPath p = forward_path(g, v);
        ++classes[domain.index(p.vertices.back())];
        ++s.paths_checked;
        // Potential telescoping: the forward path realizes dist exactly.
        if (!g.is_target(p.vertices.back()) || p.total_time != g.dist(v)) ++s.path_violations;
        s.exited = s.exited || touches_boundary(p, domain);
      }
      double same = 0.0;
      for (const auto& [k, count] : classes) same += static_cast<double>(count) * (count - 1) / 2.0;
      s.fraction = same / pairs;
      if (r == 0 && !forest_written) {
        const DomainBox view(std::min(2 * b, half - 1));
        std::map<std::size_t, int> label;
        for (Vertex v : view.vertices()) {
          const auto nx = g.next(v);
          const std::size_t root = domain.index(forward_path(g, v).vertices.back());
          const int cls = label.emplace(root, static_cast<int>(label.size())).first->second;
          forest_rows.push_back({num(v.x), num(v.y), nx ? num(nx->x) : "", nx ? num(nx->y) : "", num(cls)});
        }
      }
    });
    if (!forest_written) {
      CsvFile forest(ctx, "forest.csv", "forest",
                     {{"n", num(n)}, {"alpha", num(alpha)}, {"functional", describe_functional(functional)}},
                     {"x", "y", "next_x", "next_y", "class"});
      for (const auto& row : forest_rows) forest.row(row);
      forest_written = true;
    }
    std::vector<double> fractions;
    long exited = 0;
    for (std::size_t r = 0; r < samples.size(); ++r) {
      const GraphSample& s = samples[r];
      raw.row({num(n), num(alpha), num(distance), num(half), num(r), num(s.fraction), s.exited ? "1" : "0"});
      fractions.push_back(s.fraction);
      exited += s.exited ? 1 : 0;
      structure.vertices_checked += s.structure.vertices_checked;
      structure.out_degree_violations += s.structure.out_degree_violations;
      structure.undirected_circuits += s.structure.undirected_circuits;
      structure.potential_violations += s.structure.potential_violations;
      paths_checked += s.paths_checked;
      path_violations += s.path_violations;
    }
    const MeanEstimate m = summarize(fractions);
    curve.row({num(n), num(m.mean), num(m.std_error), num(c.replicas), num(exited)});
    ctx.result.boundary_flags += exited;
    coal.push_back({{"n", n}, {"alpha", alpha}, {"line_distance", distance}, {"domain_half_width", half},
                    {"mean", m.mean}, {"stderr", m.std_error}, {"exited", exited}});
  }

  // Backward clusters of the origin toward a line at lattice distance N/2.
  CsvFile clusters_csv(ctx, "clusters.csv", "clusters", {{"functional", describe_functional(functional)}},
                       {"domain_half_width", "replica", "reached_boundary", "size"});
  json clusters = json::array();
  for (int size : c.cluster_sizes) {
    const DomainBox domain(size);
    const double alpha = norm * size / 2.0;
    const std::vector<Vertex> targets = discretize_line(functional, alpha, domain);
    std::vector<int> reached(static_cast<std::size_t>(c.cluster_replicas));
    std::vector<long> sizes(reached.size());
    parallel_for(reached.size(), ctx.threads, [&](std::size_t r) {
      const WeightField field(c.law, hashing::replica_seed(c.seed, r));
      const GeodesicGraph g = build_graph(EdgeWeights(field, domain), targets);
      const BackwardCluster cl = backward_cluster(g, {0, 0}, domain.size());
      reached[r] = cl.truncated ? 1 : 0;
      sizes[r] = static_cast<long>(cl.members.size());
    });
    std::vector<double> as_double;
    for (std::size_t r = 0; r < reached.size(); ++r) {
      clusters_csv.row({num(size), num(r), num(reached[r]), num(sizes[r])});
      as_double.push_back(reached[r]);
    }
    const MeanEstimate m = summarize(as_double);
    clusters.push_back({{"domain_half_width", size}, {"reach_fraction", m.mean}, {"stderr", m.std_error},
                        {"seeds", c.cluster_replicas}});
  }

  // Encounter points inside [-M, M]^2 toward a line at lattice distance 2M.
  CsvFile enc_csv(ctx, "encounters.csv", "encounters", {{"functional", describe_functional(functional)}},
                  {"M", "replica", "count", "bound"});
  json encounters = json::array();
  for (int big_m : c.encounter_sizes) {
    const DomainBox window(big_m);
    const double alpha = norm * 2.0 * big_m;
    const DomainBox domain(domain_for_distance(2.0 * big_m, big_m + 2));
    const std::vector<Vertex> targets = discretize_line(functional, alpha, domain);
    std::vector<long> counts(static_cast<std::size_t>(c.replicas));
    parallel_for(counts.size(), ctx.threads, [&](std::size_t r) {
      const WeightField field(c.law, hashing::replica_seed(c.seed, r));
      const GeodesicGraph g = build_graph(EdgeWeights(field, domain), targets);
      counts[r] = static_cast<long>(encounter_points(g, window).size());
    });
    long worst = 0;
    long violations = 0;
    for (std::size_t r = 0; r < counts.size(); ++r) {
      enc_csv.row({num(big_m), num(r), num(counts[r]), num(8 * big_m)});
      worst = std::max(worst, counts[r]);
      if (counts[r] > 8L * big_m) ++violations;
    }
    encounters.push_back({{"M", big_m}, {"max_count", worst}, {"bound", 8 * big_m}, {"violations", violations}});
    if (violations > 0) ctx.fail("graph", "graph.encounter_bound", "M = " + num(big_m));
  }

  if (structure.out_degree_violations) ctx.fail("graph", "graph.out_degree", num(structure.out_degree_violations));
  if (structure.undirected_circuits) ctx.fail("graph", "graph.circuits", num(structure.undirected_circuits));
  if (structure.potential_violations) ctx.fail("graph", "graph.potential", num(structure.potential_violations));
  if (path_violations) ctx.fail("graph", "graph.path_geodesic", num(path_violations));
  ctx.result.hard_violations += structure.out_degree_violations + structure.undirected_circuits +
                                structure.potential_violations + path_violations;
  ctx.result.summary = {{"functional", vec_json(functional.normal)},
                        {"coalescence", coal},
                        {"structure",
                         {{"vertices_checked", structure.vertices_checked},
                          {"out_degree_violations", structure.out_degree_violations},
                          {"undirected_circuits", structure.undirected_circuits},
                          {"potential_violations", structure.potential_violations},
                          {"paths_checked", paths_checked},
                          {"path_violations", path_violations}}},
                        {"clusters", clusters},
                        {"encounters", encounters}};
  write_json(ctx, "graph_report.json", "graph-report", ctx.result.summary);
}

// ---------------------------------------------------------------- amn-scan

void run_amn(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const LinearFunctional functional = resolve_functional(c);
  const double norm = norm2(functional.normal);
  CsvFile raw(ctx, "amn.csv", "amn", {{"functional", describe_functional(functional)}, {"m", num(c.m)}},
              {"n", "replica", "out_degree_ok", "no_circuit_ok", "coalesce_ok", "no_boundary_backflow_ok", "all"});
  CsvFile curve(ctx, "amn_curve.csv", "amn-curve", {{"functional", describe_functional(functional)}, {"m", num(c.m)}},
                {"n", "p_all", "stderr", "fail_out_degree", "fail_circuit", "fail_coalesce", "fail_backflow"});
  json points = json::array();
  for (double nd : c.n_values) {
    const int n = static_cast<int>(std::lround(nd));
    if (n < c.m) throw ConfigError("schedule.n: every n must be >= m = " + std::to_string(c.m));
    // The line sits at alpha = 2n, beyond [-n, n]^2.
    const double alpha = 2.0 * n;
    const int half = c.domain_half_width > 0 ? c.domain_half_width : domain_for_distance(alpha / norm, n + 2);
    const DomainBox domain(half);
    require_line_beyond_window(functional, alpha, domain, DomainBox(n));
    const std::vector<Vertex> targets = discretize_line(functional, alpha, domain);
    std::vector<EventReportAmn> reports(static_cast<std::size_t>(c.replicas));
    parallel_for(reports.size(), ctx.threads, [&](std::size_t r) {
      const WeightField field(c.law, hashing::replica_seed(c.seed, r));
      reports[r] = check_Amn(build_graph(EdgeWeights(field, domain), targets), c.m, n);
    });
    std::vector<double> all;
    double fails[4] = {0, 0, 0, 0};
    for (std::size_t r = 0; r < reports.size(); ++r) {
      const EventReportAmn& e = reports[r];
      raw.row({num(n), num(r), num(int(e.out_degree_ok)), num(int(e.no_circuit_ok)), num(int(e.coalesce_ok)),
               num(int(e.no_boundary_backflow_ok)), num(int(e.all()))});
      all.push_back(e.all() ? 1.0 : 0.0);
      fails[0] += !e.out_degree_ok;
      fails[1] += !e.no_circuit_ok;
      fails[2] += !e.coalesce_ok;
      fails[3] += !e.no_boundary_backflow_ok;
    }
    const double k = static_cast<double>(reports.size());
    const MeanEstimate m = summarize(all);
    curve.row({num(n), num(m.mean), num(m.std_error), num(fails[0] / k), num(fails[1] / k), num(fails[2] / k),
               num(fails[3] / k)});
    points.push_back({{"n", n}, {"alpha", alpha}, {"domain_half_width", half}, {"p_all", m.mean}, {"stderr", m.std_error},
                      {"fail_out_degree", fails[0] / k}, {"fail_circuit", fails[1] / k},
                      {"fail_coalesce", fails[2] / k}, {"fail_backflow", fails[3] / k}});
  }
  ctx.result.summary = {{"functional", vec_json(functional.normal)}, {"m", c.m}, {"points", points}};
  write_json(ctx, "amn_report.json", "amn-report", ctx.result.summary);
}

// ---------------------------------------------------------------- mu-average

struct MuSample {
  double curl_single = 0.0;
  double curl_averaged = 0.0;
  double path_gap = 0.0;
  long bound_checks = 0;
  long bound_violations = 0;
  double bound_max_excess = -std::numeric_limits<double>::infinity();
  std::vector<double> theta1;
  std::vector<double> theta2;
};

void run_mu_average(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const LinearFunctional functional = resolve_functional(c);
  const int w = c.window_half_width > 0 ? c.window_half_width : 16;
  RhoOptions opt;
  opt.n_radial = w;
  opt.alpha_span = c.alpha_span;
  opt.h = c.h;
  const RhoGeometry geo = rho_geometry(functional, w, opt);
  const DomainBox& window = geo.window;

  std::vector<MuSample> samples(static_cast<std::size_t>(c.replicas));
  parallel_for(samples.size(), ctx.threads, [&](std::size_t r) {
    const WeightField field(c.law, hashing::replica_seed(c.seed, r));
    const AveragedIncrements avg = average_increments(field, functional, geo.grid, geo.domain, window, true);
    MuSample& s = samples[r];
    for (const IncrementConfiguration& inc : avg.per_alpha) s.curl_single = std::max(s.curl_single, inc.max_abs_curl());
    s.curl_averaged = avg.fbar.max_abs_curl();
    const Vertex bases[3] = {{0, 0}, {-w, -w}, {w / 2, -w / 2}};
    const EdgeWeights weights(field, geo.domain);
    for (Vertex x : bases) {
      for (Vertex y : window.vertices()) {
        s.path_gap = std::max(s.path_gap, std::abs(reconstruct_f(avg.fbar, x, y) - reconstruct_f_transposed(avg.fbar, x, y)));
      }
      const Vertex source[1] = {x};
      const PassageResult from_x = sweep(weights, source);
      auto check_bound = [&](const std::vector<double>& f) {
        for (std::size_t i = 0; i < window.size(); ++i) {
          const double excess = std::abs(f[i]) - from_x.dist(window.vertex(i));
          s.bound_max_excess = std::max(s.bound_max_excess, excess);
          ++s.bound_checks;
          if (excess > 1e-9) ++s.bound_violations;
        }
      };
      for (const IncrementConfiguration& inc : avg.per_alpha) check_bound(reconstruct_field(inc, x));
      check_bound(reconstruct_field(avg.fbar, x));
    }
    s.theta1 = avg.fbar.theta1;
    s.theta2 = avg.fbar.theta2;
  });

  MuSample total;
  std::vector<double> mean1(window.size(), 0.0);
  std::vector<double> mean2(window.size(), 0.0);
  for (const MuSample& s : samples) {
    total.curl_single = std::max(total.curl_single, s.curl_single);
    total.curl_averaged = std::max(total.curl_averaged, s.curl_averaged);
    total.path_gap = std::max(total.path_gap, s.path_gap);
    total.bound_checks += s.bound_checks;
    total.bound_violations += s.bound_violations;
    total.bound_max_excess = std::max(total.bound_max_excess, s.bound_max_excess);
    for (std::size_t i = 0; i < window.size(); ++i) {
      mean1[i] += s.theta1[i] / static_cast<double>(samples.size());
      mean2[i] += s.theta2[i] / static_cast<double>(samples.size());
    }
  }
  const Meta extra = {{"n", num(geo.grid.n)},
                      {"h", num(geo.grid.h)},
                      {"alpha0", num(geo.grid.offset)},
                      {"window", num(w)},
                      {"domain_half_width", num(geo.domain.half_width())},
                      {"functional", describe_functional(functional)}};
  CsvFile csv(ctx, "fbar.csv", "fbar", extra, {"x", "y", "theta1", "theta2"});
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Vertex v = window.vertex(i);
    csv.row({num(v.x), num(v.y), num(mean1[i]), num(mean2[i])});
  }
  if (total.curl_single > 1e-12) ctx.fail("mu", "mu.curl_single", num(total.curl_single));
  if (total.curl_averaged > 1e-9) ctx.fail("mu", "mu.curl_averaged", num(total.curl_averaged));
  if (total.path_gap > 1e-9) ctx.fail("mu", "mu.path_independence", num(total.path_gap));
  if (total.bound_violations) ctx.fail("mu", "mu.f_bound_tau", num(total.bound_violations));
  ctx.result.hard_violations += total.bound_violations + (total.curl_single > 1e-12) + (total.curl_averaged > 1e-9) +
                                (total.path_gap > 1e-9);
  ctx.result.summary = {{"functional", vec_json(functional.normal)},
                        {"n", geo.grid.n},
                        {"h", geo.grid.h},
                        {"alpha0", geo.grid.offset},
                        {"window", w},
                        {"domain_half_width", geo.domain.half_width()},
                        {"max_curl_single", total.curl_single},
                        {"max_curl_averaged", total.curl_averaged},
                        {"max_path_discrepancy", total.path_gap},
                        {"bound_checks", total.bound_checks},
                        {"bound_violations", total.bound_violations},
                        {"bound_max_excess", total.bound_max_excess}};
  write_json(ctx, "mu_report.json", "mu-report", ctx.result.summary);
}

// ---------------------------------------------------------------- rho-shape

void run_rho_shape(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const ShapeEstimate shape = shape_for(c, ctx.threads);
  write_shape_csv(ctx, shape, "shape.csv");
  ctx.result.boundary_flags += shape.boundary_touches;
  const ShapeEstimate symmetric = symmetrize_lattice(shape);
  const LinearFunctional functional =
      c.normal ? LinearFunctional{*c.normal} : supporting_functional(symmetric, c.theta).functional;

  RhoOptions opt;
  opt.n_radial = c.n_radial;
  opt.alpha_span = c.alpha_span;
  opt.h = c.h;
  opt.window_half_width = std::max(c.n_radial, *std::max_element(c.ladder.begin(), c.ladder.end()));
  opt.keep_increments = true;
  const RhoEstimate est = estimate_rho(c.law, functional, c.replicas, c.seed, opt, ctx.threads);
  const SupportingLineReport sl = supporting_line_check(est.rho, est.std_error, symmetric, c.theta);

  const Meta extra = {{"n", num(est.geometry.grid.n)},
                      {"h", num(est.geometry.grid.h)},
                      {"alpha0", num(est.geometry.grid.offset)},
                      {"window", num(est.geometry.window.half_width())},
                      {"functional", describe_functional(functional)}};
  CsvFile per(ctx, "rho_replicas.csv", "rho-replicas", extra, {"replica", "rho_e1", "rho_e2"});
  for (std::size_t r = 0; r < est.per_replica.size(); ++r) {
    per.row({num(r), num(est.per_replica[r].x), num(est.per_replica[r].y)});
  }

  CsvFile res_csv(ctx, "residual.csv", "residual", extra, {"replica", "r", "max", "mean", "points"});
  int nonincreasing = 0;
  for (std::size_t r = 0; r < est.increments.size(); ++r) {
    const ResidualStats stats = shape_residual(est.increments[r], est.rho, c.ladder);
    nonincreasing += stats.max_nonincreasing ? 1 : 0;
    for (const AnnulusResidual& a : stats.annuli) {
      res_csv.row({num(r), num(a.r), num(a.max), num(a.mean), num(a.points)});
    }
  }
  {
    const int r_max = *std::max_element(c.ladder.begin(), c.ladder.end());
    const IncrementConfiguration& inc = est.increments.front();
    const std::vector<double> f = reconstruct_field(inc, {0, 0});
    CsvFile field_csv(ctx, "residual_field.csv", "residual-field", extra, {"x", "y", "f", "residual"});
    for (int y = -r_max; y <= r_max; ++y) {
      for (int x = -r_max; x <= r_max; ++x) {
        const Vertex v{x, y};
        const double fv = f[inc.window.index(v)];
        const double res = v == Vertex{0, 0} ? 0.0 : std::abs(fv - dot(to_vec(v), est.rho)) / l1_norm(v);
        field_csv.row({num(x), num(y), num(fv), num(res)});
      }
    }
  }

  ctx.result.summary = {
      {"theta", c.theta},
      {"functional", vec_json(functional.normal)},
      {"shape_n", shape.n_used},
      {"ghat_theta", symmetric.ghat[*symmetric.index_of(c.theta)]},
      {"stderr_theta", symmetric.stderr_ghat[*symmetric.index_of(c.theta)]},
      {"rho", vec_json(est.rho)},
      {"rho_stderr", vec_json(est.std_error)},
      {"rho_diagonal", {{"mean", est.rho_diagonal.mean}, {"stderr", est.rho_diagonal.std_error}}},
      {"linearity_defect", {{"mean", est.linearity_defect.mean}, {"stderr", est.linearity_defect.std_error}}},
      {"n_radial", est.n_radial},
      {"geometry",
       {{"domain_half_width", est.geometry.domain.half_width()},
        {"window", est.geometry.window.half_width()},
        {"alpha0", est.geometry.grid.offset},
        {"alpha_span", est.geometry.grid.n},
        {"h", est.geometry.grid.h}}},
      {"supporting_line",
       {{"dot", sl.dot},
        {"dot_stderr", sl.dot_se},
        {"dot_ok", sl.dot_ok},
        {"domination_violations", sl.domination_violations},
        {"max_domination_excess", sl.max_domination_excess},
        {"tangent_degenerate", sl.tangent_degenerate},
        {"functional_normal", vec_json(sl.functional_normal)},
        {"normal_stderr", vec_json(sl.normal_se)},
        {"normal_ok", sl.normal_ok}}},
      {"residual", {{"ladder", c.ladder}, {"seeds", est.increments.size()}, {"seeds_nonincreasing", nonincreasing}}}};
  write_json(ctx, "rho.json", "rho", ctx.result.summary);
}

// ---------------------------------------------------------------- mean-identity

void run_mean_identity(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const LinearFunctional functional = resolve_functional(c);
  const double norm = norm2(functional.normal);
  CsvFile csv(ctx, "identity.csv", "identity",
              {{"functional", describe_functional(functional)}, {"x", to_string(c.x)}},
              {"n", "g_x", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "paired", "paired_stderr", "combined_stderr",
               "agree", "drift", "domain_half_width", "boundary_flags"});
  json points = json::array();
  for (double n : c.n_values) {
    const IdentityReport rep =
        check_mean_identity(c.law, functional, c.x, n, c.replicas, c.seed, ctx.threads, c.domain_half_width);
    csv.row({num(n), num(rep.g_x), num(rep.lhs.mean), num(rep.lhs.std_error), num(rep.rhs.mean), num(rep.rhs.std_error),
             num(rep.paired.mean), num(rep.paired.std_error), num(rep.combined_se), rep.agree ? "1" : "0",
             num(rep.drift), num(rep.half_width), num(rep.boundary_flags)});
    ctx.result.boundary_flags += rep.boundary_flags;
    points.push_back({{"n", n}, {"g_x", rep.g_x}, {"lhs", rep.lhs.mean}, {"lhs_stderr", rep.lhs.std_error},
                      {"rhs", rep.rhs.mean}, {"rhs_stderr", rep.rhs.std_error}, {"paired", rep.paired.mean},
                      {"paired_stderr", rep.paired.std_error}, {"combined_stderr", rep.combined_se},
                      {"agree", rep.agree}, {"drift", rep.drift}, {"domain_half_width", rep.half_width},
                      {"boundary_flags", rep.boundary_flags}});
  }

  // tau(0, L_alpha) / alpha for growing alpha.
  CsvFile pl(ctx, "pointline.csv", "pointline", {{"functional", describe_functional(functional)}},
             {"alpha", "mean_ratio", "stderr", "abs_gap"});
  json pointline = json::array();
  const int reps = std::max(2, c.shape_replicas);
  for (double alpha : c.alphas) {
    const DomainBox domain(domain_for_distance(alpha / norm, 4));
    const std::vector<Vertex> targets = discretize_line(functional, alpha, domain);
    std::vector<double> ratio(static_cast<std::size_t>(reps));
    parallel_for(ratio.size(), ctx.threads, [&](std::size_t r) {
      const WeightField field(c.law, hashing::replica_seed(c.seed, r));
      ratio[r] = tau_to_set(EdgeWeights(field, domain), {0, 0}, targets).first / alpha;
    });
    const MeanEstimate m = summarize(ratio);
    pl.row({num(alpha), num(m.mean), num(m.std_error), num(std::abs(m.mean - 1.0))});
    pointline.push_back({{"alpha", alpha}, {"mean_ratio", m.mean}, {"stderr", m.std_error},
                         {"abs_gap", std::abs(m.mean - 1.0)}});
  }
  ctx.result.summary = {{"functional", vec_json(functional.normal)},
                        {"x", {c.x.x, c.x.y}},
                        {"points", points},
                        {"pointline", pointline}};
  write_json(ctx, "identity.json", "identity", ctx.result.summary);
}

// ---------------------------------------------------------------- verify

struct SuiteTally {
  std::string name;
  long checks = 0;
  std::vector<Failure> failures;

  void check(bool ok, const std::string& invariant, const std::string& detail) {
    ++checks;
    if (!ok && failures.size() < 50) failures.push_back({name, invariant, detail});
  }
};

void suite_oracle(const ExperimentConfig& c, SuiteTally& t, unsigned threads) {
  const DomainBox box(2);
  std::vector<SuiteTally> per(static_cast<std::size_t>(c.replicas), SuiteTally{t.name, 0, {}});
  parallel_for(per.size(), threads, [&](std::size_t r) {
    const WeightField field(c.law, hashing::replica_seed(c.seed, r));
    const EdgeWeights weights(field, box);
    for (Vertex x : box.vertices()) {
      const Vertex src[1] = {x};
      const PassageResult from_x = sweep(weights, src);
      for (Vertex y : box.vertices()) {
        const double fast = from_x.dist(y);
        const double slow = brute_force_tau(field, x, y, box);
        per[r].check(fast == slow, "oracle.tau_equals_brute_force",
                     "replica " + num(r) + " " + to_string(x) + "->" + to_string(y) + ": " + num(fast) + " vs " + num(slow));
      }
    }
  });
  for (auto& p : per) {
    t.checks += p.checks;
    for (auto& f : p.failures) t.failures.push_back(f);
  }
}

void suite_passage(const ExperimentConfig& c, SuiteTally& t) {
  const DomainBox box(12);
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<int> coord(-12, 12);
  for (int r = 0; r < 5; ++r) {
    const WeightField field(c.law, hashing::replica_seed(c.seed, static_cast<std::uint64_t>(r)));
    const EdgeWeights weights(field, box);
    std::vector<Vertex> sources;
    for (int k = 0; k < 1 + r; ++k) sources.push_back({coord(rng), coord(rng)});
    const PassageResult res = sweep(weights, sources);
    const auto violations = check_passage_invariants(res, weights);
    t.check(violations.empty(), violations.empty() ? "passage.invariants" : violations.front().invariant,
            violations.empty() ? "" : violations.front().detail);
    for (int k = 0; k < 10; ++k) {
      const Vertex x{coord(rng), coord(rng)};
      const Vertex y{coord(rng), coord(rng)};
      const double xy = tau_point(weights, x, y).first;
      const double yx = tau_point(weights, y, x).first;
      t.check(xy == yx, "passage.symmetry", to_string(x) + " " + to_string(y));
      const auto [d, path] = tau_point(weights, x, y);
      t.check(path_time(field, path.vertices) == d, "passage.path_time", to_string(x) + " " + to_string(y));
    }
  }
}

void suite_busemann(const ExperimentConfig& c, SuiteTally& t) {
  const DomainBox domain(30);
  const double alphas[2] = {12.0, 18.0};
  for (int r = 0; r < 3; ++r) {
    const WeightField field(c.law, hashing::replica_seed(c.seed, static_cast<std::uint64_t>(r)));
    const PropertyReport p = verify_busemann_properties(field, LinearFunctional{{1.0, 0.0}}, alphas, domain);
    t.check(p.additivity_max_rel <= 1e-9, "busemann.additivity", num(p.additivity_max_rel));
    t.check(p.bound_max_excess <= 1e-12, "busemann.bound", num(p.bound_max_excess));
    t.check(p.restriction_max_rel <= 1e-9, "busemann.restriction", num(p.restriction_max_rel));
    t.check(p.translation_max_abs == 0.0, "busemann.translation", num(p.translation_max_abs));
  }
}

void suite_graph(const ExperimentConfig& c, SuiteTally& t) {
  const DomainBox domain(30);
  const std::vector<Vertex> targets = discretize_line(LinearFunctional{{1.0, 0.0}}, 20.0, domain);
  for (int r = 0; r < 3; ++r) {
    const WeightField field(c.law, hashing::replica_seed(c.seed, static_cast<std::uint64_t>(r)));
    const EdgeWeights weights(field, domain);
    const GeodesicGraph g = build_graph(weights, targets);
    const GraphStructureReport s = check_structure(g, weights);
    // Ties under discrete laws legitimately give extra out-edges and circuits.
    if (c.law.is_continuous()) {
      t.check(s.out_degree_violations == 0, "graph.out_degree", num(s.out_degree_violations));
      t.check(s.undirected_circuits == 0, "graph.circuits", num(s.undirected_circuits));
    }
    t.check(s.potential_violations == 0, "graph.potential", num(s.potential_violations));
    for (Vertex v : DomainBox(5).vertices()) {
      const GeodesicPath p = forward_path(g, v);
      t.check(g.is_target(p.vertices.back()) && p.total_time == g.dist(v), "graph.path_geodesic", to_string(v));
    }
  }
}

void suite_curl(const ExperimentConfig& c, SuiteTally& t) {
  const LinearFunctional functional{{1.0, 0.0}};
  RhoOptions opt;
  opt.n_radial = 6;
  opt.alpha_span = 4;
  const RhoGeometry geo = rho_geometry(functional, 6, opt);
  for (int r = 0; r < 3; ++r) {
    const WeightField field(c.law, hashing::replica_seed(c.seed, static_cast<std::uint64_t>(r)));
    const AveragedIncrements avg = average_increments(field, functional, geo.grid, geo.domain, geo.window, true);
    for (const auto& inc : avg.per_alpha) t.check(inc.max_abs_curl() <= 1e-12, "mu.curl_single", num(inc.max_abs_curl()));
    t.check(avg.fbar.max_abs_curl() <= 1e-9, "mu.curl_averaged", num(avg.fbar.max_abs_curl()));
    double gap = 0.0;
    for (Vertex y : geo.window.vertices()) {
      gap = std::max(gap, std::abs(reconstruct_f(avg.fbar, {0, 0}, y) - reconstruct_f_transposed(avg.fbar, {0, 0}, y)));
    }
    t.check(gap <= 1e-9, "mu.path_independence", num(gap));
  }
}

// Deliberately corrupted distance map; every check below must fire.
void suite_corrupt_dist(const ExperimentConfig& c, SuiteTally& t) {
  const DomainBox box(6);
  const WeightField field(c.law, c.seed);
  const EdgeWeights weights(field, box);
  const std::vector<Vertex> targets = discretize_line(LinearFunctional{{1.0, 0.0}}, 4.0, box);
  PassageResult res = sweep(weights, targets);
  res.mutable_dist_values()[box.index({-3, 1})] += 0.5;
  const auto violations = check_passage_invariants(res, weights);
  for (const auto& v : violations) t.check(false, v.invariant, v.detail);
  if (violations.empty()) t.check(false, "verify.fixture_undetected", "corrupted dist map passed every invariant");
}

void run_verify(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  json suites = json::array();
  for (const std::string& name : c.suites) {
    SuiteTally t{name, 0, {}};
    if (name == "oracle") {
      suite_oracle(c, t, ctx.threads);
    } else if (name == "passage") {
      suite_passage(c, t);
    } else if (name == "busemann") {
      suite_busemann(c, t);
    } else if (name == "graph") {
      suite_graph(c, t);
    } else if (name == "curl") {
      suite_curl(c, t);
    } else if (name == "corrupt-dist") {
      suite_corrupt_dist(c, t);
    } else {
      throw ConfigError("suites: unknown suite \"" + name + "\" (oracle, passage, busemann, graph, curl, corrupt-dist)");
    }
    json failures = json::array();
    for (const Failure& f : t.failures) {
      failures.push_back({{"invariant", f.invariant}, {"detail", f.detail}});
      ctx.result.failures.push_back(f);
    }
    suites.push_back({{"name", name}, {"checks", t.checks}, {"failures", failures}});
  }
  ctx.result.hard_violations += static_cast<long>(ctx.result.failures.size());
  ctx.result.summary = {{"passed", ctx.result.failures.empty()}, {"suites", suites}};
  write_json(ctx, "verify_report.json", "verify-report", ctx.result.summary);
}

void write_manifest(const ExperimentConfig& c, const RunResult& res, double seconds, unsigned threads) {
  std::ofstream out(c.out_dir / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest in " + c.out_dir.string());
  out << "schema_version: " << kSchemaVersion << "\n";
  out << "code_version: " << code_version() << "\n";
  out << "kind: " << to_string(c.kind) << "\n";
  out << "law: " << c.law.describe() << "\n";
  out << "seed: " << c.seed << "\n";
  out << "replicas: " << c.replicas << "\n";
  out << "threads: " << threads << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", seconds);
  out << "wall_time_seconds: " << buf << "\n";
  out << "boundary_flags: " << res.boundary_flags << "\n";
  out << "hard_violations: " << res.hard_violations << "\n";
  out << "exit_code: " << res.exit_code << "\n";
  out << "files:";
  for (const auto& f : res.files) out << " " << f;
  out << "\n";
  for (const auto& f : res.failures) out << "failure: " << f.suite << " " << f.invariant << " " << f.detail << "\n";
  out << "config_file:\n" << (c.echo.is_null() ? std::string("{}") : c.echo.dump(2)) << "\n";
  out << "config_effective:\n" << config_to_json(c).dump(2) << "\n";
}

}  // namespace

LinearFunctional resolve_functional(const ExperimentConfig& config, std::optional<ShapeEstimate>* shape_out) {
  if (config.normal) return LinearFunctional{*config.normal};
  const ShapeEstimate shape = symmetrize_lattice(shape_for(config, default_threads()));
  const LinearFunctional g = supporting_functional(shape, config.theta).functional;
  if (shape_out) *shape_out = shape;
  return g;
}

RunResult run_experiment(const ExperimentConfig& config) {
  config.law.validate();
  RunResult result;
  fs::create_directories(config.out_dir);
  const unsigned threads = config.threads > 0 ? config.threads : default_threads();
  Context ctx{config, result, threads};
  const auto start = std::chrono::steady_clock::now();
  switch (config.kind) {
    case ExperimentKind::kShape: run_shape(ctx); break;
    case ExperimentKind::kBusemannVerify: run_busemann(ctx); break;
    case ExperimentKind::kGraphCoalescence: run_graph(ctx); break;
    case ExperimentKind::kAmnScan: run_amn(ctx); break;
    case ExperimentKind::kMuAverage: run_mu_average(ctx); break;
    case ExperimentKind::kRhoShape: run_rho_shape(ctx); break;
    case ExperimentKind::kMeanIdentity: run_mean_identity(ctx); break;
    case ExperimentKind::kVerify: run_verify(ctx); break;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.exit_code = result.failures.empty() ? 0 : 1;
  write_manifest(config, result, seconds, threads);
  return result;
}

}  // namespace fpp
