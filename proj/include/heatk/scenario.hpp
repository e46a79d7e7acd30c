#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "heatk/errors.hpp"
#include "heatk/estimates.hpp"
#include "heatk/families.hpp"
#include "heatk/heat_kernel.hpp"
#include "heatk/kernel_checks.hpp"
#include "heatk/legendre.hpp"
#include "heatk/report.hpp"
#include "heatk/spectral.hpp"

namespace heatk {

enum class Check { scalars, properties, monotonicity, davies, thm31, thm32 };

inline const std::vector<Check>& all_checks() {
  static const std::vector<Check> order{Check::scalars, Check::properties, Check::monotonicity,
                                        Check::davies,  Check::thm31,      Check::thm32};
  return order;
}

inline const char* check_name(Check c) {
  switch (c) {
    case Check::scalars: return "scalars";
    case Check::properties: return "properties";
    case Check::monotonicity: return "monotonicity";
    case Check::davies: return "davies";
    case Check::thm31: return "thm31";
    case Check::thm32: return "thm32";
  }
  return "?";
}

inline Check parse_check(const std::string& s, const std::string& field) {
  for (Check c : all_checks()) {
    if (s == check_name(c)) return c;
  }
  throw ConfigError(field, "unknown check '" + s + "'");
}

struct ScenarioTolerances {
  double series_eps = kDefaultSeriesEps;
  double exhaustion = kDefaultExhaustionTolerance;
  double certificate = kCertificateTolerance;
  double davies = 1e-10;
  double symmetry = 1e-12;
  double conservation = 1e-10;
  double semigroup = 1e-9;
  double heat_equation = 1e-6;
  double monotone = 1e-12;
  double derivative = 1e-6;
  double spectral = 1e-10;
};

struct GrowthSettings {
  double m = 1.0;
  std::optional<double> c0;  // fitted when absent
  Distance r0 = 1;
  std::optional<Distance> r_max;
  bool fit_m = false;
};

struct DaviesSettings {
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  double amplitude = 2.0;
};

struct Thm31Settings {
  Distance domain_radius = 8;  // Dirichlet ball for exact Lambda on truncations
};

struct Thm32Settings {
  std::size_t samples = 10;
  double span = 4.0;     // t in [T, span T]
  Distance margin = 8;   // extra truncation radius beyond ceil(C t log t)
  std::size_t decay_doublings = 10;
};

struct AnnulusSettings {
  std::vector<double> times;      // defaults to the scenario times
  std::vector<Distance> radii;    // defaults to r0 .. min(truncation radius, 64)
};

struct MonotonicitySettings {
  double t_min = 0.01;
  double t_max = 100.0;
  std::size_t points = 50;
};

struct ExhaustionSettings {
  Distance first = 8;
  std::optional<Distance> last;  // defaults to truncation radius - 1
};

/// Vertex reference from a config: an index or a label.
struct VertexRef {
  std::optional<VertexId> index;
  std::string label;
};

struct ScenarioConfig {
  FamilySpec family;
  std::vector<double> times{1.0};
  std::vector<VertexRef> centers;  // empty: all vertices of a finite family, the center of a truncation
  std::optional<double> C;         // default 1.05 * 2 D_mu e
  GrowthSettings growth;
  std::vector<Check> checks = all_checks();
  ScenarioTolerances tolerances;
  DaviesSettings davies;
  Thm31Settings thm31;
  Thm32Settings thm32;
  AnnulusSettings annulus;
  MonotonicitySettings monotonicity;
  ExhaustionSettings exhaustion;
  std::string output_dir = "heatk_out";
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

using json = nlohmann::json;

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) == keys.end()) {
      throw ConfigError(path + "/" + k, "unknown field");
    }
  }
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

inline double get_positive(const json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
  return v;
}

inline std::int64_t get_integer(const json& j, const std::string& path, std::int64_t min) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < min) throw ConfigError(path, "must be at least " + std::to_string(min));
  return v;
}

inline std::vector<double> get_times(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected a list of times");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_positive(j[i], path + "/" + std::to_string(i)));
  return out;
}

inline VertexRef get_vertex_ref(const json& j, const std::string& path) {
  if (j.is_string()) return {std::nullopt, j.get<std::string>()};
  return {static_cast<VertexId>(get_integer(j, path, 0)), ""};
}

inline FamilySpec parse_family_spec(const json& j, const std::filesystem::path& base) {
  allow_keys(j, "/family",
             {"family", "dimension", "degree", "truncation_radius", "size", "sides", "file", "weight", "measure", "mu_min"});
  FamilySpec f;
  if (!j.contains("family") || !j["family"].is_string()) throw ConfigError("/family/family", "missing family name");
  f.family = parse_family(j["family"].get<std::string>());
  if (j.contains("dimension")) f.dimension = static_cast<int>(get_integer(j["dimension"], "/family/dimension", 1));
  if (j.contains("degree")) f.degree = static_cast<int>(get_integer(j["degree"], "/family/degree", 2));
  if (j.contains("truncation_radius")) f.truncation_radius = get_integer(j["truncation_radius"], "/family/truncation_radius", 0);
  if (j.contains("size")) f.size = static_cast<std::size_t>(get_integer(j["size"], "/family/size", 1));
  if (j.contains("sides")) {
    if (!j["sides"].is_array()) throw ConfigError("/family/sides", "expected a list");
    for (std::size_t i = 0; i < j["sides"].size(); ++i) {
      f.sides.push_back(static_cast<std::size_t>(get_integer(j["sides"][i], "/family/sides/" + std::to_string(i), 1)));
    }
  }
  if (j.contains("file")) {
    if (!j["file"].is_string()) throw ConfigError("/family/file", "expected a path");
    std::filesystem::path p = j["file"].get<std::string>();
    f.file = (p.is_relative() ? base / p : p).lexically_normal().string();
  }
  if ((f.family == Family::box_zd || f.family == Family::regular_tree) && !j.contains("truncation_radius")) {
    throw ConfigError("/family/truncation_radius", "required for " + std::string(family_name(f.family)));
  }
  if ((f.family == Family::path || f.family == Family::cycle) && !j.contains("size")) {
    throw ConfigError("/family/size", "required for " + std::string(family_name(f.family)));
  }
  if (f.family == Family::custom_file && f.file.empty()) throw ConfigError("/family/file", "required for custom_file");
  if (j.contains("weight")) {
    const auto& w = j["weight"];
    if (w.is_number()) {
      f.weight.constant = get_number(w, "/family/weight");
    } else {
      allow_keys(w, "/family/weight", {"expression"});
      if (!w.contains("expression") || !w["expression"].is_string()) throw ConfigError("/family/weight/expression", "expected a string");
      f.weight.expression = w["expression"].get<std::string>();
    }
  }
  if (j.contains("measure")) {
    const auto& m = j["measure"];
    if (m.is_number()) {
      f.measure.kind = MeasureRule::Kind::constant;
      f.measure.constant = get_positive(m, "/family/measure");
    } else if (m.is_string()) {
      if (m.get<std::string>() != "degree") throw ConfigError("/family/measure", "expected a number, \"degree\" or an expression object");
      f.measure.kind = MeasureRule::Kind::degree;
    } else {
      allow_keys(m, "/family/measure", {"expression"});
      if (!m.contains("expression") || !m["expression"].is_string()) throw ConfigError("/family/measure/expression", "expected a string");
      f.measure.kind = MeasureRule::Kind::expression;
      f.measure.expression = m["expression"].get<std::string>();
    }
  }
  if (j.contains("mu_min")) f.mu_min = get_positive(j["mu_min"], "/family/mu_min");
  return f;
}

}  // namespace detail

/// Parses a scenario. Relative `family.file` paths resolve against `base`.
inline ScenarioConfig parse_scenario(const nlohmann::json& j, const std::filesystem::path& base = ".") {
  using detail::allow_keys;
  using detail::get_integer;
  using detail::get_number;
  using detail::get_positive;
  allow_keys(j, "", {"family", "times", "centers", "C", "growth", "checks", "tolerances", "davies", "thm31", "thm32",
                     "annulus", "monotonicity", "exhaustion", "output"});
  ScenarioConfig cfg;
  if (!j.contains("family")) throw ConfigError("/family", "missing");
  cfg.family = detail::parse_family_spec(j["family"], base);
  if (j.contains("times")) {
    cfg.times = detail::get_times(j["times"], "/times");
    if (cfg.times.empty()) throw ConfigError("/times", "needs at least one time");
  }
  if (j.contains("centers")) {
    if (!j["centers"].is_array()) throw ConfigError("/centers", "expected a list");
    for (std::size_t i = 0; i < j["centers"].size(); ++i) {
      cfg.centers.push_back(detail::get_vertex_ref(j["centers"][i], "/centers/" + std::to_string(i)));
    }
  }
  if (j.contains("C")) cfg.C = get_positive(j["C"], "/C");
  if (j.contains("growth")) {
    const auto& g = j["growth"];
    allow_keys(g, "/growth", {"m", "c0", "r0", "r_max", "fit_m"});
    if (g.contains("m")) cfg.growth.m = get_positive(g["m"], "/growth/m");
    if (g.contains("c0")) cfg.growth.c0 = get_positive(g["c0"], "/growth/c0");
    if (g.contains("r0")) cfg.growth.r0 = get_integer(g["r0"], "/growth/r0", 1);
    if (g.contains("r_max")) cfg.growth.r_max = get_integer(g["r_max"], "/growth/r_max", 1);
    if (g.contains("fit_m")) {
      if (!g["fit_m"].is_boolean()) throw ConfigError("/growth/fit_m", "expected a boolean");
      cfg.growth.fit_m = g["fit_m"].get<bool>();
    }
  }
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("/checks", "expected a list");
    std::set<Check> seen;
    for (std::size_t i = 0; i < j["checks"].size(); ++i) {
      const auto path = "/checks/" + std::to_string(i);
      if (!j["checks"][i].is_string()) throw ConfigError(path, "expected a check name");
      seen.insert(parse_check(j["checks"][i].get<std::string>(), path));
    }
    cfg.checks.clear();
    for (Check c : all_checks()) {
      if (seen.count(c)) cfg.checks.push_back(c);
    }
  }
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    allow_keys(t, "/tolerances", {"series_eps", "exhaustion", "certificate", "davies", "symmetry", "conservation",
                                  "semigroup", "heat_equation", "monotone", "derivative", "spectral"});
    auto& tol = cfg.tolerances;
    const std::pair<const char*, double*> fields[] = {
        {"series_eps", &tol.series_eps}, {"exhaustion", &tol.exhaustion},       {"certificate", &tol.certificate},
        {"davies", &tol.davies},         {"symmetry", &tol.symmetry},           {"conservation", &tol.conservation},
        {"semigroup", &tol.semigroup},   {"heat_equation", &tol.heat_equation}, {"monotone", &tol.monotone},
        {"derivative", &tol.derivative}, {"spectral", &tol.spectral}};
    for (const auto& [name, dst] : fields) {
      if (t.contains(name)) *dst = get_positive(t[name], std::string("/tolerances/") + name);
    }
  }
  if (j.contains("davies")) {
    const auto& d = j["davies"];
    allow_keys(d, "/davies", {"samples", "seed", "amplitude"});
    if (d.contains("samples")) cfg.davies.samples = static_cast<std::size_t>(get_integer(d["samples"], "/davies/samples", 1));
    if (d.contains("seed")) cfg.davies.seed = static_cast<std::uint64_t>(get_integer(d["seed"], "/davies/seed", 0));
    if (d.contains("amplitude")) cfg.davies.amplitude = get_positive(d["amplitude"], "/davies/amplitude");
  }
  if (j.contains("thm31")) {
    allow_keys(j["thm31"], "/thm31", {"domain_radius"});
    if (j["thm31"].contains("domain_radius")) {
      cfg.thm31.domain_radius = get_integer(j["thm31"]["domain_radius"], "/thm31/domain_radius", 0);
    }
  }
  if (j.contains("thm32")) {
    const auto& s = j["thm32"];
    allow_keys(s, "/thm32", {"samples", "span", "margin", "decay_doublings"});
    if (s.contains("samples")) cfg.thm32.samples = static_cast<std::size_t>(get_integer(s["samples"], "/thm32/samples", 1));
    if (s.contains("span")) {
      cfg.thm32.span = get_number(s["span"], "/thm32/span");
      if (!(cfg.thm32.span >= 1.0)) throw ConfigError("/thm32/span", "must be at least 1");
    }
    if (s.contains("margin")) cfg.thm32.margin = get_integer(s["margin"], "/thm32/margin", 0);
    if (s.contains("decay_doublings")) {
      cfg.thm32.decay_doublings = static_cast<std::size_t>(get_integer(s["decay_doublings"], "/thm32/decay_doublings", 1));
    }
  }
  if (j.contains("annulus")) {
    const auto& a = j["annulus"];
    allow_keys(a, "/annulus", {"times", "radii"});
    if (a.contains("times")) cfg.annulus.times = detail::get_times(a["times"], "/annulus/times");
    if (a.contains("radii")) {
      if (!a["radii"].is_array()) throw ConfigError("/annulus/radii", "expected a list");
      for (std::size_t i = 0; i < a["radii"].size(); ++i) {
        cfg.annulus.radii.push_back(get_integer(a["radii"][i], "/annulus/radii/" + std::to_string(i), 0));
      }
    }
  }
  if (j.contains("monotonicity")) {
    const auto& m = j["monotonicity"];
    allow_keys(m, "/monotonicity", {"t_min", "t_max", "points"});
    if (m.contains("t_min")) cfg.monotonicity.t_min = get_positive(m["t_min"], "/monotonicity/t_min");
    if (m.contains("t_max")) cfg.monotonicity.t_max = get_positive(m["t_max"], "/monotonicity/t_max");
    if (m.contains("points")) cfg.monotonicity.points = static_cast<std::size_t>(get_integer(m["points"], "/monotonicity/points", 1));
    if (!(cfg.monotonicity.t_max > cfg.monotonicity.t_min) && cfg.monotonicity.points > 1) {
      throw ConfigError("/monotonicity/t_max", "must exceed t_min");
    }
  }
  if (j.contains("exhaustion")) {
    const auto& e = j["exhaustion"];
    allow_keys(e, "/exhaustion", {"first", "last"});
    if (e.contains("first")) cfg.exhaustion.first = get_integer(e["first"], "/exhaustion/first", 1);
    if (e.contains("last")) cfg.exhaustion.last = get_integer(e["last"], "/exhaustion/last", 1);
  }
  if (j.contains("output")) {
    allow_keys(j["output"], "/output", {"dir"});
    if (j["output"].contains("dir")) {
      if (!j["output"]["dir"].is_string()) throw ConfigError("/output/dir", "expected a path");
      cfg.output_dir = j["output"]["dir"].get<std::string>();
    }
  }
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Preparation

/// Family instance, resolved centers and derived constants of a validated scenario.
struct PreparedScenario {
  ScenarioConfig cfg;
  GeneratedFamily family;
  std::vector<VertexId> centers;
  double C = 0.0;
  std::optional<GrowthProfile> profile;
  std::optional<Thm32Thresholds> thresholds;

  bool has(Check c) const { return std::find(cfg.checks.begin(), cfg.checks.end(), c) != cfg.checks.end(); }
  const WeightedGraph& graph() const { return family.graph; }

  /// Exhaustion around the family center, inside the truncation.
  ExhaustionSchedule schedule() const {
    const Distance last = cfg.exhaustion.last.value_or(std::max<Distance>(1, family.truncation_radius - 1));
    return ExhaustionSchedule::doubling(family.center, std::min(cfg.exhaustion.first, last), last, cfg.tolerances.exhaustion);
  }
};

inline VertexId resolve_vertex(const WeightedGraph& g, const VertexRef& ref, const std::string& path) {
  if (ref.index) {
    if (*ref.index >= g.size()) throw ConfigError(path, "vertex " + std::to_string(*ref.index) + " out of range");
    return *ref.index;
  }
  if (auto v = g.find(ref.label)) return *v;
  // A numeric string from a command line falls back to an index.
  if (!ref.label.empty() && std::all_of(ref.label.begin(), ref.label.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return resolve_vertex(g, {static_cast<VertexId>(std::stoull(ref.label)), ""}, path);
  }
  throw ConfigError(path, "unknown vertex label '" + ref.label + "'");
}

inline Distance eccentricity(const WeightedGraph& g, VertexId x) {
  Distance ecc = 0;
  for (auto d : distances_from(g, x)) ecc = std::max(ecc, d);
  return ecc;
}

inline double default_C(double d_mu) { return 1.05 * 2.0 * d_mu * std::numbers::e; }

/// Builds the family and validates everything that needs it: centers, C, the
/// growth profile, thresholds and truncation adequacy. No kernel is computed.
inline PreparedScenario prepare_scenario(ScenarioConfig cfg) {
  PreparedScenario ps{std::move(cfg), generate_family(ps.cfg.family), {}, 0.0, std::nullopt, std::nullopt};
  const auto& c = ps.cfg;
  const auto& g = ps.family.graph;
  for (std::size_t i = 0; i < c.centers.size(); ++i) {
    ps.centers.push_back(resolve_vertex(g, c.centers[i], "/centers/" + std::to_string(i)));
  }
  if (ps.centers.empty()) {
    if (ps.family.truncated) {
      ps.centers.push_back(ps.family.center);
    } else {
      for (VertexId v = 0; v < g.size(); ++v) ps.centers.push_back(v);
    }
  }
  if (ps.family.truncated) {
    for (VertexId x : ps.centers) {
      if (graph_distance(g, ps.family.center, x) >= ps.family.truncation_radius) {
        throw ConfigError("/centers", "center " + g.label(x) + " lies on the truncation boundary");
      }
    }
    const auto sched = ps.schedule();
    if (sched.radii.back() >= ps.family.truncation_radius && ps.family.truncation_radius > 0) {
      throw ConfigError("/exhaustion/last", "exhaustion radius must stay below the truncation radius");
    }
  }
  ps.C = c.C.value_or(default_C(g.d_mu()));

  if (ps.has(Check::thm32)) {
    try {
      require_c_above_critical(ps.C, g.d_mu());
    } catch (const PreconditionError& e) {
      throw ConfigError("/C", e.what());
    }
    const Distance r_max = c.growth.r_max.value_or(
        ps.family.truncated ? ps.family.truncation_radius : std::max<Distance>(c.growth.r0, [&] {
          Distance ecc = 0;
          for (VertexId x : ps.centers) ecc = std::max(ecc, eccentricity(g, x));
          return ecc;
        }()));
    if (r_max < c.growth.r0) throw ConfigError("/growth/r_max", "empty radius range");
    double m = c.growth.m;
    if (c.growth.fit_m) {
      if (r_max <= c.growth.r0) throw ConfigError("/growth/fit_m", "exponent fit needs r_max > r0");
      m = std::ceil(estimate_growth_exponent(g, c.growth.r0, r_max, ps.centers) - 1e-9);
    }
    auto prof = fit_growth_profile(g, m, c.growth.r0, r_max, ps.centers);
    if (c.growth.c0) {
      if (prof.c0 > *c.growth.c0 * (1 + 1e-12)) {
        throw ConfigError("/growth/c0", "volume growth V(x,r) <= c0 r^m fails at x=" + g.label(prof.worst_center) +
                                            ", r=" + std::to_string(prof.worst_radius) + " (needs c0 >= " +
                                            format_double(prof.c0) + ")");
      }
      prof.c0 = *c.growth.c0;
    }
    if (prof.m < 1.0) throw ConfigError("/growth/m", "the annulus bound needs m >= 1");
    ps.thresholds = theorem32_thresholds(growth_constants(g, prof), ps.C);
    ps.profile = std::move(prof);

    if (ps.family.truncated) {
      const double t_max = c.thm32.span * ps.thresholds->T;
      const auto r_need = static_cast<Distance>(std::ceil(ps.C * t_max * std::log(t_max)));
      for (VertexId x : ps.centers) {
        const Distance need = r_need + graph_distance(g, ps.family.center, x) + c.thm32.margin;
        if (ps.family.truncation_radius < need) {
          throw ConfigError("/family/truncation_radius",
                            "must be at least " + std::to_string(need) + " = ceil(C t log t) at t=" + format_double(t_max) +
                                " plus offset and margin");
        }
      }
    }
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Running

struct ScenarioResult {
  std::vector<BoundReport> reports;
  std::vector<SpectralBottom> spectra;
  std::vector<std::vector<std::string>> diag_curve;  // t, x, p, derivative, energy
  std::vector<std::vector<std::string>> thm32_curve; // t, log_tail_bound, r
  int exit_code = 0;

  bool all_passed() const {
    return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.passed; });
  }
};

namespace detail {

// A single member covering a finite graph.
inline ExhaustionSchedule whole_graph_schedule(const WeightedGraph& g, VertexId x) {
  ExhaustionSchedule s;
  s.center = x;
  s.radii = {std::max<Distance>(1, eccentricity(g, x))};
  return s;
}

inline std::string fmt_t(double t) { return format_double(t); }

inline void push_upper(ScenarioResult& out, std::string theorem, std::string instance, double value, double tol,
                       std::map<std::string, double> params = {}) {
  auto r = make_upper_report(std::move(theorem), std::move(instance), value, tol, LambdaMode::zero, 0.0);
  r.parameters = std::move(params);
  out.reports.push_back(std::move(r));
}

// Scalars: the cosh inequality with its chain functions on 500 points of
// (0, 50], the closed-form majorant of fhat on 60 log-spaced gammas.
inline void run_scalars(ScenarioResult& out) {
  std::vector<double> s_grid;
  for (int i = 1; i <= 500; ++i) s_grid.push_back(50.0 * i / 500.0);
  for (const double s : s_grid) {
    const double lhs = cosh_gap(s), rhs = s * s * std::exp(s);
    auto r = make_upper_report("scalar_cosh", "s=" + fmt_t(s), lhs, rhs, LambdaMode::zero, 0.0);
    r.parameters = {{"chain_f", chain_f(s)}, {"chain_f1", chain_f1(s)}};
    r.passed = r.passed && chain_f(s) <= 0.0 && chain_f1(s) >= 0.0;
    out.reports.push_back(std::move(r));
  }
  for (const double gamma : log_spaced(1e-3, 1e3, 60)) {
    const auto fh = legendre_fhat(gamma);
    auto r = make_upper_report("legendre", "gamma=" + fmt_t(gamma), fh.value, folz_majorant(gamma), LambdaMode::zero, 1e-12);
    r.parameters = {{"argmin", fh.argmin}};
    out.reports.push_back(std::move(r));
  }
}

inline void run_properties(const PreparedScenario& ps, ScenarioResult& out) {
  const auto& g = ps.graph();
  const auto& tol = ps.cfg.tolerances;
  const auto dom = DirichletDomain::whole(g);
  std::vector<std::pair<VertexId, VertexId>> pairs;
  for (VertexId x : ps.centers) {
    const auto dist = distances_from(g, x, 2);
    for (VertexId y = 0; y < g.size(); ++y) {
      if (dist[y] != kUnreached) pairs.emplace_back(x, y);
    }
  }
  for (const double t : ps.cfg.times) {
    for (const double s : ps.cfg.times) {
      const auto rep = check_kernel_properties(dom, t, s, pairs, tol.series_eps);
      const std::string inst = "t=" + fmt_t(t) + ",s=" + fmt_t(s);
      const std::map<std::string, double> params{{"t", t}, {"s", s}, {"pairs", static_cast<double>(rep.pairs_checked)}};
      push_upper(out, "symmetry", inst, rep.symmetry, tol.symmetry, params);
      push_upper(out, "nonnegativity", inst, rep.negativity, 0.0, params);
      push_upper(out, "conservation", inst, rep.conservation, tol.conservation, params);
      push_upper(out, "semigroup", inst, rep.semigroup, tol.semigroup, params);
      push_upper(out, "heat_equation", inst, rep.heat_equation, tol.heat_equation, params);
    }
  }
}

inline void run_monotonicity(const PreparedScenario& ps, ScenarioResult& out) {
  const auto& g = ps.graph();
  const auto& c = ps.cfg;
  const auto dom = DirichletDomain::whole(g);
  const auto times = log_spaced(c.monotonicity.t_min, c.monotonicity.t_max, c.monotonicity.points);
  for (VertexId x : ps.centers) {
    const auto rep = check_diagonal_monotonicity(dom, x, times, c.tolerances.series_eps);
    const std::string inst = "x=" + g.label(x);
    push_upper(out, "diag_monotone", inst, rep.max_increase, c.tolerances.monotone,
               {{"points", static_cast<double>(rep.points.size())}});
    push_upper(out, "diag_derivative", inst, rep.max_derivative_error, c.tolerances.derivative,
               {{"points", static_cast<double>(rep.points.size())}});
    for (const auto& pt : rep.points) {
      out.diag_curve.push_back({format_double(pt.t), g.label(x), format_double(pt.value), format_double(pt.derivative),
                                format_double(pt.energy)});
    }
  }
  if (!ps.family.truncated) return;

  // Exhaustion by nested balls of the truncation.
  const auto base = ps.schedule();
  for (VertexId x : ps.centers) {
    for (const double t : c.times) {
      const std::string inst = "t=" + fmt_t(t) + ",x=" + g.label(x);
      ExhaustionSchedule sched = base;
      sched.series_eps = c.tolerances.series_eps;
      try {
        const auto res = heat_kernel_traced(g, sched, t, x);
        const auto& last = res.steps.back();
        push_upper(out, "exhaustion_monotone", inst, res.max_monotone_violation, c.tolerances.monotone,
                   {{"steps", static_cast<double>(res.steps.size())}, {"p_diag", last.diagonal}});
        push_upper(out, "exhaustion_convergence", inst, res.steps.size() > 1 ? last.max_change : 0.0, c.tolerances.exhaustion,
                   {{"radius", static_cast<double>(last.radius)}, {"lost_mass", last.lost_mass}});
      } catch (const MonotonicityViolation& e) {
        push_upper(out, "exhaustion_monotone", inst, e.violation(), c.tolerances.monotone);
      } catch (const ScheduleExhausted& e) {
        double change = 0.0;
        e.last().values.for_each([&](VertexId y, double p) { change = std::max(change, std::abs(p - e.previous()(y))); });
        push_upper(out, "exhaustion_convergence", inst, change, c.tolerances.exhaustion);
      }
    }
  }
}

// Random bounded psi: odd samples are i.i.d. uniform on [-A, A], even samples
// s * min(D, d(x1, .)) with random s, x1 and D.
inline void run_davies(const PreparedScenario& ps, ScenarioResult& out) {
  const auto& g = ps.graph();
  const auto& c = ps.cfg;
  const auto dom = DirichletDomain::whole(g);
  std::vector<HeatKernelField> fields;
  for (const double t : c.times) {
    for (VertexId x : ps.centers) fields.push_back(dirichlet_heat_kernel(dom, t, x, c.tolerances.series_eps));
  }
  std::mt19937_64 rng(c.davies.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Distance diameter_hint = 0;
  if (!ps.centers.empty()) diameter_hint = eccentricity(g, ps.centers.front());
  for (std::size_t k = 0; k < c.davies.samples; ++k) {
    VertexFunction psi;
    if (k % 2 == 0) {
      std::vector<double> v(g.size());
      for (auto& e : v) e = c.davies.amplitude * (2 * unit(rng) - 1);
      psi = VertexFunction::dense(std::move(v));
    } else {
      const auto x1 = static_cast<VertexId>(unit(rng) * static_cast<double>(g.size())) % g.size();
      const auto D = static_cast<Distance>(unit(rng) * static_cast<double>(diameter_hint + 1));
      psi = psi_test_function(g, x1, D, c.davies.amplitude * (1.0 - unit(rng)));
    }
    const auto data = davies_data(g, std::move(psi), 0.0);
    for (const auto& f : fields) {
      double worst = std::numeric_limits<double>::infinity();
      double worst_p = 0.0, worst_b = 0.0;
      VertexId worst_y = f.source;
      f.values.for_each([&](VertexId y, double p) {
        const double b = davies_upper_bound(g, data, f.t, f.source, y);
        const double slack = b - (p + f.truncation_error);
        if (slack < worst) {
          worst = slack;
          worst_p = p + f.truncation_error;
          worst_b = b;
          worst_y = y;
        }
      });
      auto r = make_upper_report("davies", "psi=" + std::to_string(k) + ",t=" + fmt_t(f.t) + ",x=" + g.label(f.source),
                                 worst_p, worst_b, LambdaMode::zero, c.tolerances.davies);
      r.parameters = {{"sup_b", data.sup_b}, {"y", static_cast<double>(worst_y)}, {"t", f.t}};
      out.reports.push_back(std::move(r));
    }
  }
}

// Worst pair of one kernel field against the natural-metric bound.
inline BoundReport thm31_field_report(const WeightedGraph& g, const HeatKernelField& f, double lambda, LambdaMode mode,
                                      const std::string& domain, double tol) {
  const auto dist = distances_from(g, f.source);
  double worst = std::numeric_limits<double>::infinity();
  BoundReport best;
  std::size_t pairs = 0, failures = 0;
  f.values.for_each([&](VertexId y, double p) {
    const double truth = p + f.truncation_error;
    const double log_rhs = theorem31_log_rhs(g.measure(f.source), g.measure(y), dist[y], g.d_mu(), lambda, f.t);
    const double bound = std::exp(log_rhs);
    ++pairs;
    if (bound - truth < -tol) ++failures;
    if (bound - truth < worst) {
      worst = bound - truth;
      best = make_upper_report("thm31", "", truth, bound, mode, tol);
      best.parameters = {{"y", static_cast<double>(y)}, {"d", static_cast<double>(dist[y])}, {"log_bound", log_rhs}};
    }
  });
  best.instance = "t=" + format_double(f.t) + ",x=" + g.label(f.source) + "," + domain;
  best.parameters["pairs"] = static_cast<double>(pairs);
  best.parameters["failures"] = static_cast<double>(failures);
  best.parameters["Lambda"] = lambda;
  best.parameters["D_mu"] = g.d_mu();
  best.parameters["t"] = f.t;
  best.passed = failures == 0;
  return best;
}

inline void run_thm31(const PreparedScenario& ps, ScenarioResult& out) {
  const auto& g = ps.graph();
  const auto& c = ps.cfg;
  const double tol = c.tolerances.certificate;
  if (!ps.family.truncated) {
    const auto dom = DirichletDomain::whole(g);
    const auto bottom = lambda_bottom(dom, c.tolerances.spectral);
    out.spectra.push_back(bottom);
    for (const double t : c.times) {
      for (VertexId x : ps.centers) {
        const auto f = dirichlet_heat_kernel(dom, t, x, c.tolerances.series_eps);
        out.reports.push_back(thm31_field_report(g, f, bottom.lambda, LambdaMode::exact, dom.tag(), tol));
        out.reports.push_back(thm31_field_report(g, f, 0.0, LambdaMode::zero, dom.tag(), tol));
      }
    }
    return;
  }
  // Exact mode: Dirichlet kernel of a ball with its own Lambda. Zero mode:
  // the exhaustion limit with Lambda = 0.
  const Distance radius = std::min(c.thm31.domain_radius, ps.family.truncation_radius - 1);
  const auto dom = DirichletDomain::ball(g, ps.family.center, radius);
  const auto bottom = lambda_bottom(dom, c.tolerances.spectral);
  out.spectra.push_back(bottom);
  auto sched = ps.schedule();
  sched.series_eps = c.tolerances.series_eps;
  for (const double t : c.times) {
    for (VertexId x : ps.centers) {
      if (dom.contains(x)) {
        const auto f = dirichlet_heat_kernel(dom, t, x, c.tolerances.series_eps);
        out.reports.push_back(thm31_field_report(g, f, bottom.lambda, LambdaMode::exact, dom.tag(), tol));
      }
      const auto lim = heat_kernel(g, sched, t, x);
      out.reports.push_back(thm31_field_report(g, lim, 0.0, LambdaMode::zero, "limit", tol));
    }
  }
}

inline void run_thm32(const PreparedScenario& ps, ScenarioResult& out) {
  const auto& g = ps.graph();
  const auto& c = ps.cfg;
  const auto& prof = *ps.profile;
  const auto& th = *ps.thresholds;
  const auto gc = growth_constants(g, prof);
  const double tol = c.tolerances.certificate;
  const std::map<std::string, double> consts{{"c0", gc.c0}, {"m", gc.m}, {"r0", gc.r0}, {"mu0", gc.mu0},
                                             {"D_mu", gc.d_mu}, {"K", annulus_K(gc)}, {"C", ps.C}};

  // Annulus bound against the measured tail of the instance's own kernel.
  const auto dom = DirichletDomain::whole(g);
  const auto& a_times = c.annulus.times.empty() ? c.times : c.annulus.times;
  std::vector<Distance> radii = c.annulus.radii;
  if (radii.empty()) {
    const Distance hi = ps.family.truncated ? std::min<Distance>(ps.family.truncation_radius, 64) : prof.r_max;
    for (Distance r = prof.r0; r <= hi; ++r) radii.push_back(r);
  }
  for (VertexId x : ps.centers) {
    for (const double t : a_times) {
      const auto f = dirichlet_heat_kernel(dom, t, x, c.tolerances.series_eps);
      for (const Distance r : radii) {
        if (!annulus_conditions(gc, static_cast<double>(r), t).all()) continue;
        const auto tail = tail_mass(g, f, r);
        const auto bound = annulus_tail_bound(gc, static_cast<double>(r), t);
        const std::string inst = "t=" + fmt_t(t) + ",r=" + std::to_string(r) + ",x=" + g.label(x);
        auto rep = make_upper_report("annulus", inst, tail.value, bound.value, LambdaMode::zero, tol);
        rep.parameters = consts;
        rep.parameters["log_bound"] = bound.log_value;
        out.reports.push_back(std::move(rep));
        const double ratio = std::exp(annulus_term_log(gc, static_cast<double>(r), t, 1) - annulus_term_log(gc, static_cast<double>(r), t, 0));
        auto rr = make_upper_report("annulus_ratio", inst, ratio, std::pow(2.0 / std::numbers::e, gc.m), LambdaMode::zero, 1e-12);
        rr.parameters = {{"ratio_bound", annulus_ratio_bound(gc, static_cast<double>(r), t)}};
        out.reports.push_back(std::move(rr));
      }
    }
  }

  // The log tail bound with r = C t log t: crossing at T and decrease after it.
  const double half = std::log(0.5);
  {
    const double before = thm32_log_rhs(gc, ps.C, th.T * (1 - 1e-9));
    auto rep = make_upper_report("thm32_crossing", "T=" + fmt_t(th.T), th.log_rhs_at_T, half, LambdaMode::zero, 1e-12);
    rep.parameters = consts;
    rep.parameters.insert({{"t1", th.t1}, {"t2", th.t2}, {"T", th.T}, {"t_monotone", th.t_monotone}, {"log_rhs_before_T", before}});
    rep.passed = rep.passed && (before > half || th.T <= std::max(th.t1, th.t2) * (1 + 1e-12));
    out.reports.push_back(std::move(rep));
  }
  constexpr int kCurvePoints = 200;
  double prev = thm32_log_rhs(gc, ps.C, th.T);
  double max_rise = 0.0;
  for (int i = 0; i <= kCurvePoints; ++i) {
    const double t = th.T * (1.0 + (c.thm32.span - 1.0) * i / kCurvePoints);
    const double v = thm32_log_rhs(gc, ps.C, t);
    if (i > 0) max_rise = std::max(max_rise, v - prev);
    prev = v;
    out.thm32_curve.push_back({format_double(t), format_double(v), format_double(ps.C * t * std::log(t))});
  }
  push_upper(out, "thm32_decreasing", "t in [T," + fmt_t(c.thm32.span) + "T]", max_rise, 0.0,
             {{"points", kCurvePoints + 1.0}});
  for (std::size_t k = 0; k < c.thm32.decay_doublings; ++k) {
    const double t = std::ldexp(th.T, static_cast<int>(k));
    const double ratio = std::exp(thm32_log_rhs(gc, ps.C, 2 * t) - thm32_log_rhs(gc, ps.C, t));
    auto rep = make_upper_report("thm32_doubling", "t=" + fmt_t(t), ratio, 1.0, LambdaMode::zero, 0.0);
    rep.passed = ratio < 1.0;
    out.reports.push_back(std::move(rep));
  }

  // Lower bound p(t,x,x) >= 1/(4 V(x, ceil(C t log t))) on t in [T, span T].
  const auto sched = [&] {
    auto s = ps.schedule();
    s.series_eps = c.tolerances.series_eps;
    return s;
  }();
  for (VertexId x : ps.centers) {
    const Distance limit = ps.family.truncated ? ps.family.truncation_radius - graph_distance(g, ps.family.center, x)
                                               : std::numeric_limits<Distance>::max();
    for (std::size_t i = 0; i < c.thm32.samples; ++i) {
      const double frac = c.thm32.samples == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(c.thm32.samples - 1);
      const double t = th.T * (1.0 + (c.thm32.span - 1.0) * frac);
      auto rep = ps.family.truncated ? theorem32_lower_check(g, sched, x, t, ps.C, prof, limit, tol)
                                     : theorem32_lower_check(g, whole_graph_schedule(g, x), x, t, ps.C, prof, limit, tol);
      out.reports.push_back(std::move(rep));
    }
  }
}

inline void write_rows(const std::string& path, const std::string& header, const std::vector<std::vector<std::string>>& rows) {
  auto os = open_output(path);
  os << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
    os << '\n';
  }
}

}  // namespace detail

/// Runs the requested checks in the fixed order scalars, properties,
/// monotonicity, davies, thm31, thm32. Exit code 0 when every row passes,
/// 1 otherwise.
inline ScenarioResult run_checks(const PreparedScenario& ps) {
  ScenarioResult out;
  for (Check c : all_checks()) {
    if (!ps.has(c)) continue;
    switch (c) {
      case Check::scalars: detail::run_scalars(out); break;
      case Check::properties: detail::run_properties(ps, out); break;
      case Check::monotonicity: detail::run_monotonicity(ps, out); break;
      case Check::davies: detail::run_davies(ps, out); break;
      case Check::thm31: detail::run_thm31(ps, out); break;
      case Check::thm32: detail::run_thm32(ps, out); break;
    }
  }
  out.exit_code = out.all_passed() ? 0 : 1;
  return out;
}

/// bounds.csv, summary.json, spectral.csv and the plot series under `dir`.
inline void write_scenario_reports(const PreparedScenario& ps, const ScenarioResult& res, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  {
    auto os = open_output((d / "bounds.csv").string());
    write_bounds_csv(os, res.reports);
  }
  {
    auto j = summary_json(res.reports);
    nlohmann::ordered_json full = nlohmann::ordered_json::object();
    full["instance"] = ps.family.name;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (Check c : ps.cfg.checks) checks.push_back(check_name(c));
    full["checks"] = checks;
    full["center_policy"] = ps.cfg.centers.empty() ? (ps.family.truncated ? "family-center" : "all-vertices") : "listed";
    full["passed"] = j["passed"];
    full["failed"] = j["failed"];
    full["theorems"] = j["theorems"];
    auto os = open_output((d / "summary.json").string());
    os << full.dump(2) << '\n';
  }
  if (!res.spectra.empty()) {
    auto os = open_output((d / "spectral.csv").string());
    write_spectral_csv(os, res.spectra);
  }
  if (!res.diag_curve.empty()) detail::write_rows((d / "diag_curve.csv").string(), "t,x,p,derivative,energy", res.diag_curve);
  if (!res.thm32_curve.empty()) detail::write_rows((d / "thm32_curve.csv").string(), "t,log_tail_bound,r", res.thm32_curve);
}

/// Validates, runs and writes reports. Exit status 0 all pass, 1 a certified
/// inequality fails, 2 configuration or runtime error (rethrown to the caller).
inline int run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
  const auto ps = prepare_scenario(cfg);
  const auto res = run_checks(ps);
  write_scenario_reports(ps, res, out_dir);
  return res.exit_code;
}

inline int run_scenario(const ScenarioConfig& cfg) { return run_scenario(cfg, cfg.output_dir); }

}  // namespace heatk
