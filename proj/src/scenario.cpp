#include "frobenius/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "frobenius/error.hpp"
#include "frobenius/hessian.hpp"
#include "frobenius/io.hpp"
#include "frobenius/superint.hpp"

namespace frob {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ScenarioError(where.empty() ? "<root>" : where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(join(where, key), "missing required field");
  return *it;
}

template <class T>
T as(const json& j, const std::string& where) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!j.is_number()) throw ScenarioError(where, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ScenarioError(where, "expected an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ScenarioError(where, "expected a string");
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ScenarioError(where, e.what());
  }
}

template <class T>
T opt(const json& j, const std::string& key, const std::string& where, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : as<T>(*it, join(where, key));
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ScenarioError(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as<double>(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Mode mode_from(const std::string& s, const std::string& where) {
  if (s == "verify") return Mode::verify;
  if (s == "construct") return Mode::construct;
  if (s == "classify") return Mode::classify;
  if (s == "hessian") return Mode::hessian;
  if (s == "bridge") return Mode::bridge;
  throw ScenarioError(where, "unknown mode '" + s + "'");
}

Grid parse_grid(const json& j, int n) {
  const std::string w = "grid";
  const json& nodes = need(j, "nodes", w);
  std::vector<int> counts;
  if (nodes.is_number_integer()) {
    counts.assign(n, nodes.get<int>());
  } else if (nodes.is_array()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) counts.push_back(as<int>(nodes[i], "grid.nodes[" + std::to_string(i) + "]"));
  } else {
    throw ScenarioError("grid.nodes", "expected an integer or an array of integers");
  }
  if (static_cast<int>(counts.size()) != n) throw ScenarioError("grid.nodes", "needs one count per dimension");
  for (int c : counts)
    if (c < 1) throw ScenarioError("grid.nodes", "counts must be positive");
  std::vector<double> lo, hi;
  if (j.contains("half_width")) {
    double hw = as<double>(j["half_width"], "grid.half_width");
    if (!(hw > 0.0)) throw ScenarioError("grid.half_width", "must be positive");
    lo.assign(n, -hw);
    hi.assign(n, hw);
  } else {
    lo = numbers(need(j, "lower", w), "grid.lower");
    hi = numbers(need(j, "upper", w), "grid.upper");
    if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
      throw ScenarioError("grid", "lower and upper need one entry per dimension");
  }
  try {
    return Grid(counts, lo, hi);
  } catch (const Error& e) {
    throw ScenarioError("grid", e.what());
  }
}

SeedSpec parse_seed(const json& j, int n) {
  const std::string w = "seed";
  SeedSpec s;
  s.kind = opt<std::string>(j, "kind", w, "solver");
  s.negate = j.contains("negate") ? (j["negate"].is_boolean() ? j["negate"].get<bool>()
                                                               : throw ScenarioError("seed.negate", "expected a boolean"))
                                  : false;
  if (s.kind == "solver") {
    s.rng_seed = opt<std::uint64_t>(j, "rng_seed", w, 0);
    s.candidates = opt<int>(j, "candidates", w, 8);
    if (s.candidates < 1) throw ScenarioError("seed.candidates", "must be at least 1");
  } else if (s.kind == "inline") {
    s.star = numbers(need(j, "star", w), "seed.star");
    if (s.star.size() != static_cast<std::size_t>(n * n * n))
      throw ScenarioError("seed.star", "expected " + std::to_string(n * n * n) + " values");
  } else if (s.kind == "idempotent") {
    s.idempotent = j.contains("weights") ? numbers(j["weights"], "seed.weights") : std::vector<double>(n, 1.0);
    if (s.idempotent.size() != static_cast<std::size_t>(n)) throw ScenarioError("seed.weights", "expected one weight per dimension");
  } else if (s.kind == "radial_skew") {
    s.center = numbers(need(j, "center", w), "seed.center");
    if (s.center.size() != static_cast<std::size_t>(n)) throw ScenarioError("seed.center", "expected one coordinate per dimension");
  } else if (s.kind == "field") {
    s.path = as<std::string>(need(j, "path", w), "seed.path");
  } else if (s.kind != "zero") {
    throw ScenarioError("seed.kind", "unknown seed kind '" + s.kind + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------

struct Checks {
  json list = json::array();
  bool failed = false;

  void add(const std::string& name, double residual, double tolerance, bool diagnostic = false,
           const std::string& note = {}) {
    put(name, residual, tolerance, residual <= tolerance, diagnostic, note, "upper");
  }
  /// Passes when residual ≥ tolerance.
  void lower(const std::string& name, double residual, double tolerance, const std::string& note = {}) {
    put(name, residual, tolerance, residual >= tolerance, false, note, "lower");
  }
  void put(const std::string& name, double residual, double tolerance, bool passed, bool diagnostic,
           const std::string& note, const char* bound) {
    json e = {{"name", name}, {"residual", finite(residual)}, {"tolerance", finite(tolerance)},
              {"passed", passed}, {"diagnostic", diagnostic}, {"bound", bound}};
    if (!note.empty()) e["note"] = note;
    list.push_back(std::move(e));
    if (!passed && !diagnostic) failed = true;
  }
  static json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
};

fs::path resolve(const Scenario& s, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? q : s.dir / q;
}

ProductAtPoint seed_product(const Scenario& s, const MetricAtPoint& m) {
  int n = s.dimension;
  ProductAtPoint p = ProductAtPoint::zero(m);
  if (s.seed.kind == "solver") {
    SeedSolverOptions o;
    o.candidates = s.seed.candidates;
    p = solve_seed_algebra(n, m, s.kappa, s.seed.rng_seed, o);
  } else if (s.seed.kind == "inline") {
    for (std::size_t c = 0; c < s.seed.star.size(); ++c) p.star[c] = s.seed.star[c];
  } else if (s.seed.kind == "idempotent") {
    // g-orthonormal frame is λ⁻¹ e_i; weights are taken in that frame.
    double lam = std::sqrt(m.g(0, 0));
    for (int i = 0; i < n; ++i) p.star(i, i, i) = s.seed.idempotent[i] * lam;
  }
  if (s.seed.negate)
    for (std::size_t c = 0; c < p.star.size(); ++c) p.star[c] = -p.star[c];
  return p;
}

const Grid& need_grid(const Scenario& s) {
  if (!s.grid) throw PreconditionError("mode " + to_string(s.mode) + " needs a grid");
  return *s.grid;
}

ProductField build_field(const Scenario& s, Checks& checks, json& artifacts) {
  Chart chart = s.chart();
  if (s.seed.kind == "field") {
    ProductField f = read_field(resolve(s, s.seed.path));
    if (f.chart.n() != chart.n() || f.chart.kappa() != chart.kappa())
      throw PreconditionError("field file chart does not match the scenario chart");
    artifacts["input_field"] = s.seed.path;
    return f;
  }
  const Grid& grid = need_grid(s);
  if (s.seed.kind == "radial_skew") {
    Point c = Eigen::Map<const Vec>(s.seed.center.data(), s.dimension);
    ProductField f = radial_skew_field(chart, grid, c);
    if (s.seed.negate)
      for (auto& t : f.star)
        for (std::size_t q = 0; q < t.size(); ++q) t[q] = -t[q];
    return f;
  }
  MetricAtPoint m = metric_at(chart, grid.point(grid.center_node()));
  ProductAtPoint seed = seed_product(s, m);
  SeedValidation sv = validate_seed(seed, s.kappa);
  checks.add("seed_commutativity", sv.commutativity, tol::seed);
  checks.add("seed_compatibility", sv.compatibility, tol::seed);
  checks.add("seed_associator", sv.associator, tol::seed);
  checks.add("seed_spectral_bound", spectral_bound(seed), std::numeric_limits<double>::infinity(), true,
             "blow-up arc length is about 1/bound");
  ConstructOptions o = s.construct;
  o.require_valid_seed = false;
  return construct_field(chart, seed, grid, o);
}

void verify_checks(const ProductField& f, const Tolerances& tols, Checks& checks, json& extra) {
  double h = f.grid.max_spacing();
  HmfReport r = verify_hmf_field(f);
  checks.add("commutativity", r.commutativity.max(), 1e-10);
  checks.add("compatibility", r.compatibility.max(), 1e-10);
  checks.add("hmf_residual", r.hmf.max(), tols.fd("hmf_residual", h));
  checks.add("potentiality", r.symmetry.max(), tols.fd("potentiality", h));
  checks.add("curvature_condition", r.curvature.max(), tols.fd("curvature_condition", h) + 1e-8);
  FieldSignature sig;
  try {
    sig = summarize_signature(f);
  } catch (const NotCurvedFrobeniusError& e) {
    checks.put("curved_frobenius", std::numeric_limits<double>::infinity(), tol::mu_residual, false, false, e.what(),
               "upper");
    return;
  }
  extra["signature"] = {{"mu_min", sig.mu_min}, {"mu_max", sig.mu_max}, {"residual_max", sig.residual_max},
                        {"associator_max", sig.associator_max}, {"indeterminate", sig.indeterminate},
                        {"nodes", sig.nodes}};
  if (!f.chart.flat())
    checks.add("mu_minus_one", std::max(std::abs(sig.mu_min + 1.0), std::abs(sig.mu_max + 1.0)), 1e-6);
}

void hessian_checks(const ProductField& f, const Scenario& s, Checks& checks, json& extra, json& artifacts) {
  const Tolerances& tols = s.tolerances;
  const Chart& chart = f.chart;
  double h = f.grid.max_spacing();
  FieldSignature sig = summarize_signature(f);
  if (!sig.indeterminate && sig.mu_min > tol::mu_zero) {
    extra["structure"] = "skew_hessian";
    SkewHessianReport r = check_skew_hessian(f, tols);
    checks.add("torsion_d", r.torsion_d, 1e-12);
    checks.add("torsion_dual", r.torsion_dual, 1e-12);
    checks.add("twice_curvature", r.twice_curvature, r.twice_curvature_tolerance);
    checks.lower("curvature_nonvanishing", r.min_curvature, 10.0 * r.twice_curvature_tolerance,
                 "min over nodes of max |R^D|");
    return;
  }
  extra["structure"] = "hessian";
  ConnectionField d = d_connection(f, 1);
  TensorField rd = connection_curvature(d);
  double flat = 0.0;
  for (std::size_t v = 0; v < f.grid.size(); ++v)
    if (rd.valid[v]) flat = std::max(flat, rd.values[v].max_abs());
  checks.add("connection_flatness", flat, tols.fd("connection_flatness", h));
  checks.add("torsion_d", torsion(d), 1e-12);
  AffineChart a = build_affine_chart(chart, d, tols);
  checks.add("affine_path_disagreement", a.path_disagreement, tol::affine_path_disagreement);
  checks.add("affine_pullback", a.pullback.max(), tols.fd("affine_pullback", h));
  checks.add("closedness", closedness_residual(chart, a).max(), tols.fd("closedness", h));
  PotentialField phi = solve_hessian_potential(chart, d, a, tols);
  ConsistencyReport c = verify_hesse_frobenius_consistency(f, phi);
  checks.add("hessian_potential", c.hessian.max(), tols.fd("hessian_potential", h));
  checks.add("hesse_frobenius_consistency", c.consistency.max(), tols.fd("hesse_frobenius_consistency", h));
  checks.add("d3_potential", c.d3.max(), tols.fd("d3_potential", h), false, "D^3 phi = 2P");
  checks.add("d3_potential_unit_factor", c.d3_unit_factor.max(), tols.fd("d3_potential", h), true, "D^3 phi = P");
  if (s.gauge_shifts > 0) {
    GaugeSweep g = strong_gauge_sweep(f, phi, a, s.gauge_shifts, s.gauge_seed);
    checks.add("gauge_hessian_potential", g.hessian, tols.fd("hessian_potential", h));
    checks.add("gauge_consistency", g.consistency, tols.fd("hesse_frobenius_consistency", h));
    checks.add("gauge_consistency_shift", g.consistency_shift, tols.fd("hesse_frobenius_consistency", h));
  }
  checks.add("weak_condition", check_weak_condition(f, potential_differential(phi)).max(), tols.fd("weak_condition", h));
  PotentialField psi = phi;
  for (double& x : psi.phi) x = -x;
  checks.add("difference_of_potentials", difference_of_potentials_residual(f, phi, psi).max(),
             tols.fd("difference_of_potentials", h), false, "psi = -phi");
  if (!s.potential_path.empty()) {
    fs::path stem = resolve(s, s.potential_path);
    write_potential(stem, chart, phi);
    fs::path astem = stem;
    astem += "_affine";
    write_affine_chart(astem, chart, a);
    artifacts["potential"] = s.potential_path + ".json";
    artifacts["affine_chart"] = s.potential_path + "_affine.json";
  }
}

std::string classify_point(const Scenario& s, Checks& checks) {
  Chart chart = s.chart();
  Point x = Point::Zero(s.dimension);
  MetricAtPoint m = metric_at(chart, x);
  ProductAtPoint p = seed_product(s, m);
  Signature sig = estimate_mu(p, riemann_at(chart, x));
  checks.add("mu_fit_residual", sig.residual, tol::mu_residual);
  try {
    return to_string(classify(sig, chart.flat(), max_associator(p)));
  } catch (const ClassificationError& e) {
    checks.put("classification", std::numeric_limits<double>::infinity(), 0.0, false, false, e.what(), "upper");
    return {};
  }
}

int code_for(const Error& e) { return e.category() == ErrorCategory::numerical ? 4 : 3; }

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::verify: return "verify";
    case Mode::construct: return "construct";
    case Mode::classify: return "classify";
    case Mode::hessian: return "hessian";
    case Mode::bridge: return "bridge";
  }
  return "?";
}

Scenario parse_scenario(const json& doc, const fs::path& dir) {
  Scenario s;
  s.source = doc;
  s.dir = dir;
  if (!doc.is_object()) throw ScenarioError("<root>", "expected a JSON object");
  int schema = as<int>(need(doc, "schema", ""), "schema");
  if (schema != schema_version) throw ScenarioError("schema", "unsupported schema " + std::to_string(schema));
  s.mode = mode_from(as<std::string>(need(doc, "mode", ""), "mode"), "mode");

  const json& c = need(doc, "chart", "");
  s.dimension = as<int>(need(c, "dimension", "chart"), "chart.dimension");
  s.kappa = as<double>(need(c, "kappa", "chart"), "chart.kappa");
  s.domain_radius = as<double>(need(c, "domain_radius", "chart"), "chart.domain_radius");
  try {
    (void)s.chart();
  } catch (const Error& e) {
    throw ScenarioError("chart", e.what());
  }
  if (doc.contains("grid")) s.grid = parse_grid(doc["grid"], s.dimension);
  if (doc.contains("seed"))
    s.seed = parse_seed(doc["seed"], s.dimension);
  else if (s.mode != Mode::classify && s.mode != Mode::construct)
    throw ScenarioError("seed", "missing required field");

  bool needs_grid = s.mode == Mode::construct || s.mode == Mode::hessian || s.mode == Mode::bridge ||
                    s.mode == Mode::verify;
  if (needs_grid && !s.grid && s.seed.kind != "field") throw ScenarioError("grid", "missing required field");

  if (doc.contains("propagation")) {
    const json& p = doc["propagation"];
    s.construct.max_step = opt<double>(p, "max_step", "propagation", s.construct.max_step);
    if (!(s.construct.max_step > 0.0)) throw ScenarioError("propagation.max_step", "must be positive");
    if (p.contains("axis_order")) {
      const json& ao = p["axis_order"];
      if (!ao.is_array()) throw ScenarioError("propagation.axis_order", "expected an array of integers");
      for (std::size_t i = 0; i < ao.size(); ++i)
        s.construct.axis_order.push_back(as<int>(ao[i], "propagation.axis_order[" + std::to_string(i) + "]"));
    }
  }
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) throw ScenarioError("tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      std::string w = "tolerances." + it.key();
      double v = as<double>(it.value(), w);
      try {
        s.tolerances.set_constant(it.key(), v);
      } catch (const Error& e) {
        throw ScenarioError(w, e.what());
      }
    }
  }
  if (doc.contains("gauge")) {
    s.gauge_shifts = opt<int>(doc["gauge"], "shifts", "gauge", s.gauge_shifts);
    s.gauge_seed = opt<std::uint64_t>(doc["gauge"], "rng_seed", "gauge", s.gauge_seed);
  }
  if (doc.contains("output")) {
    const json& o = doc["output"];
    s.report_path = opt<std::string>(o, "report", "output", "");
    s.field_path = opt<std::string>(o, "field", "output", "");
    s.potential_path = opt<std::string>(o, "potential", "output", "");
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError(path.string(), "cannot open scenario file");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ScenarioError(path.string(), e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

void apply_overrides(Scenario& s, const RunOverrides& o) {
  if (o.rng_seed) {
    s.seed.rng_seed = *o.rng_seed;
    s.source["seed"]["rng_seed"] = *o.rng_seed;
  }
  if (o.grid_h) {
    double h = *o.grid_h;
    if (!(h > 0.0)) throw ScenarioError("--grid-h", "must be positive");
    if (!s.grid) throw ScenarioError("--grid-h", "scenario has no grid");
    std::vector<int> counts;
    for (int a = 0; a < s.grid->dim(); ++a)
      counts.push_back(std::max(3, static_cast<int>(std::lround((s.grid->hi()[a] - s.grid->lo()[a]) / h)) + 1));
    s.grid = Grid(counts, s.grid->lo(), s.grid->hi());
  }
  json ov = json::object();
  if (o.grid_h) ov["grid_h"] = *o.grid_h;
  if (o.rng_seed) ov["rng_seed"] = *o.rng_seed;
  if (!ov.empty()) s.source["overrides"] = ov;
}

RunResult run(const Scenario& s) {
  auto start = std::chrono::steady_clock::now();
  Checks checks;
  json extra = json::object();
  json artifacts = json::object();
  std::string label;
  json error = nullptr;
  int code = 0;
  try {
    switch (s.mode) {
      case Mode::construct: {
        ProductField f = build_field(s, checks, artifacts);
        verify_checks(f, s.tolerances, checks, extra);
        std::string out = s.field_path.empty() ? "field" : s.field_path;
        write_field(resolve(s, out), f);
        artifacts["field"] = out + ".json";
        break;
      }
      case Mode::verify: {
        ProductField f = build_field(s, checks, artifacts);
        verify_checks(f, s.tolerances, checks, extra);
        break;
      }
      case Mode::classify: {
        if (s.grid || s.seed.kind == "field") {
          ProductField f = build_field(s, checks, artifacts);
          try {
            FieldSignature sig;
            Signature g = field_signature(f, &sig);
            checks.add("mu_fit_residual", g.residual, tol::mu_residual);
            label = to_string(classify(g, f.chart.flat(), sig.associator_max));
          } catch (const ClassificationError& e) {
            checks.put("classification", std::numeric_limits<double>::infinity(), 0.0, false, false, e.what(), "upper");
          }
        } else {
          label = classify_point(s, checks);
        }
        break;
      }
      case Mode::hessian: {
        ProductField f = build_field(s, checks, artifacts);
        hessian_checks(f, s, checks, extra, artifacts);
        break;
      }
      case Mode::bridge: {
        ProductField f = build_field(s, checks, artifacts);
        BridgeReport b = bridge_report(f, s.tolerances);
        for (const CheckEntry& e : b.checks) checks.put(e.name, e.residual, e.tolerance, e.passed, e.diagnostic, e.note, "upper");
        label = b.label;
        if (!b.classification_error.empty())
          checks.put("classification", std::numeric_limits<double>::infinity(), 0.0, false, false,
                     b.classification_error, "upper");
        extra["sis_diff_discrepancy"] = b.sis_diff_discrepancy;
        extra["fitted_ds_coefficient"] = b.fitted_ds_coefficient;
        extra["printed_ds_coefficient"] = 1.0 / 13.0;
        extra["hessian_side"] = b.hessian_side;
        break;
      }
    }
    code = checks.failed ? 1 : 0;
  } catch (const SingularityError& e) {
    code = 4;
    error = {{"category", "numerical"}, {"message", e.what()}, {"arc_length", e.arc_length()}};
  } catch (const Error& e) {
    code = code_for(e);
    error = {{"category", code == 4 ? "numerical" : "precondition"}, {"message", e.what()}};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json report = {{"schema", schema_version},
                 {"version", version_string},
                 {"mode", to_string(s.mode)},
                 {"scenario", s.source},
                 {"checks", checks.list},
                 {"passed", code == 0},
                 {"exit_code", code},
                 {"label", label.empty() ? json(nullptr) : json(label)},
                 {"tolerances", s.tolerances.constants()},
                 {"artifacts", artifacts},
                 {"details", extra},
                 {"error", error},
                 {"timing", {{"seconds", secs}}}};
  if (s.grid) report["grid"] = {{"h", s.grid->max_spacing()}, {"nodes", s.grid->counts()}};
  return {report, code};
}

json diff_reports(const json& a, const json& b) {
  if (a.value("schema", 0) != b.value("schema", -1)) throw SchemaError("reports have different schema versions");
  if (a.value("mode", "") != b.value("mode", "")) throw SchemaError("reports have different modes");
  auto index = [](const json& r) {
    std::map<std::string, json> m;
    if (r.contains("checks"))
      for (const json& c : r["checks"]) m[c.at("name").get<std::string>()] = c;
    return m;
  };
  auto ia = index(a), ib = index(b);
  json deltas = json::array(), only_a = json::array(), only_b = json::array();
  for (const auto& [name, ca] : ia) {
    auto it = ib.find(name);
    if (it == ib.end()) {
      only_a.push_back(name);
      continue;
    }
    const json& cb = it->second;
    if (ca.at("residual") == cb.at("residual") && ca.at("passed") == cb.at("passed")) continue;
    json d = {{"name", name}, {"a", ca.at("residual")}, {"b", cb.at("residual")},
              {"passed_a", ca.at("passed")}, {"passed_b", cb.at("passed")}};
    if (ca["residual"].is_number() && cb["residual"].is_number()) {
      double ra = ca["residual"].get<double>(), rb = cb["residual"].get<double>();
      d["delta"] = rb - ra;
      if (rb != 0.0) d["ratio"] = ra / rb;
    }
    deltas.push_back(std::move(d));
  }
  for (const auto& [name, cb] : ib)
    if (!ia.count(name)) only_b.push_back(name);
  json out = {{"schema", schema_version}, {"mode", a.value("mode", "")}, {"deltas", deltas},
              {"only_in_a", only_a}, {"only_in_b", only_b}};
  if (a.value("label", json()) != b.value("label", json())) out["label"] = {{"a", a["label"]}, {"b", b["label"]}};
  return out;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

}  // namespace frob
