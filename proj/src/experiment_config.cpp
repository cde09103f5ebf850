#include <fstream>
#include <sstream>

#include "fpp/experiments.hpp"

namespace fpp {

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::kShape, "shape"},
    {ExperimentKind::kBusemannVerify, "busemann-verify"},
    {ExperimentKind::kGraphCoalescence, "graph-coalescence"},
    {ExperimentKind::kAmnScan, "amn-scan"},
    {ExperimentKind::kMuAverage, "mu-average"},
    {ExperimentKind::kRhoShape, "rho-shape"},
    {ExperimentKind::kMeanIdentity, "mean-identity"},
    {ExperimentKind::kVerify, "verify"},
};

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError(field + ": " + message);
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

double get_positive(const json& j, const std::string& field) {
  const double v = get_number(j, field);
  if (!(v > 0.0)) fail(field, "must be positive");
  return v;
}

long long get_integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer, got " + std::string(j.type_name()));
  return j.get<long long>();
}

int get_int_at_least(const json& j, const std::string& field, int lo) {
  const long long v = get_integer(j, field);
  if (v < lo || v > 1'000'000'000) fail(field, "must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

std::vector<double> get_positive_list(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_positive(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> get_int_list(const json& j, const std::string& field, int lo) {
  if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_int_at_least(j[i], field + "[" + std::to_string(i) + "]", lo));
  return out;
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

DistributionConfig parse_law(const json& j) {
  if (!j.is_object()) fail("law", "expected an object with a \"name\" key");
  if (!j.contains("name") || !j["name"].is_string()) fail("law.name", "missing or not a string");
  const std::string name = j["name"].get<std::string>();
  DistributionConfig law;
  if (name == "exponential") {
    reject_unknown(j, "law", {"name", "rate"});
    law = DistributionConfig::exponential(j.contains("rate") ? get_number(j["rate"], "law.rate") : 1.0);
  } else if (name == "uniform") {
    reject_unknown(j, "law", {"name", "lo", "hi"});
    if (!j.contains("lo") || !j.contains("hi")) fail("law", "uniform needs \"lo\" and \"hi\"");
    law = DistributionConfig::uniform(get_number(j["lo"], "law.lo"), get_number(j["hi"], "law.hi"));
  } else if (name == "shifted-bernoulli") {
    reject_unknown(j, "law", {"name", "p", "a", "b"});
    if (!j.contains("p") || !j.contains("a") || !j.contains("b")) fail("law", "shifted-bernoulli needs \"p\", \"a\", \"b\"");
    law = DistributionConfig::shifted_bernoulli(get_number(j["p"], "law.p"), get_number(j["a"], "law.a"),
                                                get_number(j["b"], "law.b"));
  } else if (name == "constant") {
    reject_unknown(j, "law", {"name", "value"});
    law = DistributionConfig::constant(j.contains("value") ? get_number(j["value"], "law.value") : 1.0);
  } else {
    fail("law.name", "unknown law \"" + name + "\" (exponential, uniform, shifted-bernoulli, constant)");
  }
  try {
    law.validate();
  } catch (const ConfigError& e) {
    fail("law", e.what());
  }
  return law;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

ExperimentKind kind_from_string(const std::string& name) {
  for (const auto& k : kKindNames) {
    if (name == k.name) return k.kind;
  }
  throw ConfigError("kind: unknown experiment kind \"" + name + "\"");
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> v;
    for (const auto& k : kKindNames) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::kShape:
      c.replicas = 40;
      c.n_values = {64};
      break;
    case ExperimentKind::kBusemannVerify:
      c.replicas = 20;
      c.normal = Vec2{1.0, 0.0};
      c.domain_half_width = 100;
      c.window_half_width = 40;
      c.alphas = {50, 60, 70};
      break;
    case ExperimentKind::kGraphCoalescence:
      c.replicas = 200;
      c.n_values = {20, 40, 80};
      c.shape_n = 512;
      break;
    case ExperimentKind::kAmnScan:
      c.replicas = 200;
      c.n_values = {10, 20, 40};
      c.shape_n = 512;
      break;
    case ExperimentKind::kMuAverage:
      c.replicas = 10;
      c.normal = Vec2{1.0, 0.0};
      c.window_half_width = 16;
      c.alpha_span = 8;
      break;
    case ExperimentKind::kRhoShape:
      c.replicas = 100;
      c.n_radial = 64;
      c.shape_n = 512;
      break;
    case ExperimentKind::kMeanIdentity:
      c.replicas = 500;
      c.n_values = {20, 40};
      c.alphas = {25, 50, 100};
      c.shape_n = 512;
      break;
    case ExperimentKind::kVerify:
      c.replicas = 100;
      c.suites = {"oracle", "passage", "busemann", "graph", "curl"};
      break;
  }
  return c;
}

ExperimentConfig apply_config_json(ExperimentConfig c, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  reject_unknown(doc, "", {"kind", "law", "seed", "replicas", "threads", "geometry", "schedule", "suites", "out"});
  if (doc.contains("kind")) {
    if (!doc["kind"].is_string()) fail("kind", "expected a string");
    const ExperimentKind k = kind_from_string(doc["kind"].get<std::string>());
    if (k != c.kind) fail("kind", "config is for \"" + to_string(k) + "\" but the command runs \"" + to_string(c.kind) + "\"");
  }
  if (doc.contains("law")) c.law = parse_law(doc["law"]);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0)) {
      fail("seed", "expected a non-negative integer");
    }
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("replicas")) c.replicas = get_int_at_least(doc["replicas"], "replicas", 2);
  if (doc.contains("threads")) c.threads = static_cast<unsigned>(get_int_at_least(doc["threads"], "threads", 0));
  if (doc.contains("geometry")) {
    const json& g = doc["geometry"];
    if (!g.is_object()) fail("geometry", "expected an object");
    reject_unknown(g, "geometry", {"domain_half_width", "window_half_width", "theta", "normal", "shape_n",
                                   "shape_replicas", "steps_per_half_turn", "x"});
    if (g.contains("domain_half_width")) c.domain_half_width = get_int_at_least(g["domain_half_width"], "geometry.domain_half_width", 1);
    if (g.contains("window_half_width")) c.window_half_width = get_int_at_least(g["window_half_width"], "geometry.window_half_width", 1);
    if (g.contains("theta")) c.theta = get_number(g["theta"], "geometry.theta");
    if (g.contains("normal")) {
      const json& n = g["normal"];
      if (!n.is_array() || n.size() != 2) fail("geometry.normal", "expected [a, b]");
      const Vec2 v{get_number(n[0], "geometry.normal[0]"), get_number(n[1], "geometry.normal[1]")};
      if (v.x == 0.0 && v.y == 0.0) fail("geometry.normal", "must be nonzero");
      c.normal = v;
    }
    if (g.contains("shape_n")) c.shape_n = get_int_at_least(g["shape_n"], "geometry.shape_n", 8);
    if (g.contains("shape_replicas")) c.shape_replicas = get_int_at_least(g["shape_replicas"], "geometry.shape_replicas", 2);
    if (g.contains("steps_per_half_turn")) c.steps_per_half_turn = get_int_at_least(g["steps_per_half_turn"], "geometry.steps_per_half_turn", 2);
    if (g.contains("x")) {
      const json& x = g["x"];
      if (!x.is_array() || x.size() != 2) fail("geometry.x", "expected [x1, x2]");
      c.x = {static_cast<int>(get_integer(x[0], "geometry.x[0]")), static_cast<int>(get_integer(x[1], "geometry.x[1]"))};
    }
  }
  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    if (!s.is_object()) fail("schedule", "expected an object");
    reject_unknown(s, "schedule", {"n", "alphas", "h", "alpha_span", "m", "pair_box", "n_radial", "ladder",
                                   "cluster_sizes", "cluster_replicas", "encounter_sizes", "samples",
                                   "pairs_per_sample"});
    if (s.contains("n")) c.n_values = get_positive_list(s["n"], "schedule.n");
    if (s.contains("alphas")) c.alphas = get_positive_list(s["alphas"], "schedule.alphas");
    if (s.contains("h")) c.h = get_positive(s["h"], "schedule.h");
    if (s.contains("alpha_span")) c.alpha_span = get_positive(s["alpha_span"], "schedule.alpha_span");
    if (s.contains("m")) c.m = get_int_at_least(s["m"], "schedule.m", 0);
    if (s.contains("pair_box")) c.pair_box = get_int_at_least(s["pair_box"], "schedule.pair_box", 1);
    if (s.contains("n_radial")) c.n_radial = get_int_at_least(s["n_radial"], "schedule.n_radial", 1);
    if (s.contains("ladder")) c.ladder = get_int_list(s["ladder"], "schedule.ladder", 2);
    if (s.contains("cluster_sizes")) c.cluster_sizes = get_int_list(s["cluster_sizes"], "schedule.cluster_sizes", 4);
    if (s.contains("cluster_replicas")) c.cluster_replicas = get_int_at_least(s["cluster_replicas"], "schedule.cluster_replicas", 2);
    if (s.contains("encounter_sizes")) c.encounter_sizes = get_int_list(s["encounter_sizes"], "schedule.encounter_sizes", 1);
    if (s.contains("samples")) c.samples = get_int_at_least(s["samples"], "schedule.samples", 1);
    if (s.contains("pairs_per_sample")) c.pairs_per_sample = get_int_at_least(s["pairs_per_sample"], "schedule.pairs_per_sample", 1);
  }
  if (doc.contains("suites")) {
    const json& s = doc["suites"];
    if (!s.is_array() || s.empty()) fail("suites", "expected a non-empty array of suite names");
    c.suites.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_string()) fail("suites[" + std::to_string(i) + "]", "expected a string");
      c.suites.push_back(s[i].get<std::string>());
    }
  }
  if (doc.contains("out")) {
    if (!doc["out"].is_string()) fail("out", "expected a path string");
    c.out_dir = doc["out"].get<std::string>();
  }
  c.echo = doc;
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min(e.byte, text.size());
    int line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i + 1 < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        line_start = i + 1;
      }
    }
    const std::size_t column = upto > line_start ? upto - line_start : 1;
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) + ": invalid JSON (" +
                      e.what() + ")");
  }
}

}  // namespace fpp

namespace fpp {

json config_to_json(const ExperimentConfig& c) {
  json law;
  switch (c.law.law) {
    case Law::kExponential: law = {{"name", "exponential"}, {"rate", c.law.p1}}; break;
    case Law::kUniform:
      law = c.law.p1 == c.law.p2 ? json{{"name", "constant"}, {"value", c.law.p1}}
                                 : json{{"name", "uniform"}, {"lo", c.law.p1}, {"hi", c.law.p2}};
      break;
    case Law::kShiftedBernoulli: law = {{"name", "shifted-bernoulli"}, {"p", c.law.p1}, {"a", c.law.p2}, {"b", c.law.p3}}; break;
  }
  json geometry = {{"theta", c.theta},
                   {"shape_n", c.shape_n},
                   {"shape_replicas", c.shape_replicas},
                   {"steps_per_half_turn", c.steps_per_half_turn},
                   {"x", {c.x.x, c.x.y}}};
  if (c.domain_half_width > 0) geometry["domain_half_width"] = c.domain_half_width;
  if (c.window_half_width > 0) geometry["window_half_width"] = c.window_half_width;
  if (c.normal) geometry["normal"] = {c.normal->x, c.normal->y};
  json schedule = {{"h", c.h},
                   {"alpha_span", c.alpha_span},
                   {"m", c.m},
                   {"pair_box", c.pair_box},
                   {"n_radial", c.n_radial},
                   {"ladder", c.ladder},
                   {"cluster_sizes", c.cluster_sizes},
                   {"cluster_replicas", c.cluster_replicas},
                   {"encounter_sizes", c.encounter_sizes},
                   {"samples", c.samples},
                   {"pairs_per_sample", c.pairs_per_sample}};
  if (!c.n_values.empty()) schedule["n"] = c.n_values;
  if (!c.alphas.empty()) schedule["alphas"] = c.alphas;
  json out = {{"kind", to_string(c.kind)},
              {"law", law},
              {"seed", c.seed},
              {"replicas", c.replicas},
              {"threads", c.threads},
              {"geometry", geometry},
              {"schedule", schedule},
              {"out", c.out_dir.string()}};
  if (!c.suites.empty()) out["suites"] = c.suites;
  return out;
}

}  // namespace fpp
