#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "frobenius/error.hpp"
#include "frobenius/io.hpp"
#include "frobenius/scenario.hpp"

using namespace frob;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  fs::path p = fs::temp_directory_path() / "frobenius_test_cli";
  fs::create_directories(p);
  return p;
}

json base(const std::string& mode) {
  return {{"schema", 1},
          {"mode", mode},
          {"chart", {{"dimension", 2}, {"kappa", 1.0}, {"domain_radius", 0.45}}},
          {"grid", {{"nodes", 11}, {"half_width", 0.3}}},
          {"seed", {{"kind", "solver"}, {"rng_seed", 1}}}};
}

json strip_timing(json r) {
  r.erase("timing");
  return r;
}

std::string where_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ScenarioError& e) {
    return e.where();
  }
  return "";
}

}  // namespace

TEST_CASE("scenario parse errors name the field") {
  json d = base("verify");
  d["chart"].erase("kappa");
  CHECK(where_of(d) == "chart.kappa");
  d = base("verify");
  d["mode"] = "plot";
  CHECK(where_of(d) == "mode");
  d = base("verify");
  d["schema"] = 2;
  CHECK(where_of(d) == "schema");
  d = base("verify");
  d["tolerances"] = {{"hmf_residual", -1.0}};
  CHECK(where_of(d) == "tolerances.hmf_residual");
  d = base("verify");
  d["tolerances"] = {{"no_such_check", 1.0}};
  CHECK(where_of(d) == "tolerances.no_such_check");
  d = base("verify");
  d["seed"] = {{"kind", "inline"}, {"star", {1.0, 2.0}}};
  CHECK(where_of(d) == "seed.star");
  d = base("verify");
  d["chart"]["domain_radius"] = 5.0;
  CHECK(where_of(d) == "chart");
  d = base("verify");
  d["grid"]["nodes"] = "many";
  CHECK(where_of(d) == "grid.nodes");
  d = base("verify");
  d.erase("grid");
  CHECK(where_of(d) == "grid");
  CHECK(where_of(base("verify")).empty());
  CHECK_THROWS_AS(load_scenario(scratch() / "does_not_exist.json"), ScenarioError);
}

TEST_CASE("classify: flat chart with zero product") {
  json d = {{"schema", 1},
            {"mode", "classify"},
            {"chart", {{"dimension", 2}, {"kappa", 0.0}, {"domain_radius", 1.0}}},
            {"seed", {{"kind", "zero"}}}};
  RunResult r = run(parse_scenario(d));
  CHECK(r.exit_code == 0);
  CHECK(r.report["label"] == "manin_frobenius");
  d["chart"]["kappa"] = 1.0;
  d["chart"]["domain_radius"] = 0.5;
  CHECK(run(parse_scenario(d)).report["label"] == "nonflat_associative");
  d["seed"] = {{"kind", "solver"}, {"rng_seed", 3}};
  CHECK(run(parse_scenario(d)).report["label"] == "hessian");
}

TEST_CASE("construct writes a field that verify accepts") {
  fs::path dir = scratch();
  json d = base("construct");
  d["chart"]["domain_radius"] = 0.3;
  d["grid"] = {{"nodes", 21}, {"half_width", 0.2}};
  d["seed"]["rng_seed"] = 42;
  d["output"] = {{"field", "k1_field"}};
  RunResult r = run(parse_scenario(d, dir));
  CHECK(r.exit_code == 0);
  CHECK(r.report["artifacts"]["field"] == "k1_field.json");
  ProductField f = read_field(dir / "k1_field.json");
  CHECK(f.grid.size() == 441);

  json v = {{"schema", 1},
            {"mode", "verify"},
            {"chart", d["chart"]},
            {"seed", {{"kind", "field"}, {"path", "k1_field.json"}}}};
  RunResult rv = run(parse_scenario(v, dir));
  CHECK(rv.exit_code == 0);
  // Same residuals as the construct run's field checks.
  for (const json& c : rv.report["checks"])
    for (const json& o : r.report["checks"])
      if (o["name"] == c["name"]) CHECK(o["residual"] == c["residual"]);
}

TEST_CASE("exit codes for precondition and numerical failures") {
  json d = base("hessian");
  d["seed"] = {{"kind", "radial_skew"}, {"center", {0.0, 0.0}}};
  RunResult r = run(parse_scenario(d));
  CHECK(r.exit_code == 3);
  CHECK(r.report["error"]["category"] == "precondition");

  // A seed with a large spectral bound blows up inside the grid.
  json b = base("construct");
  b["chart"]["domain_radius"] = 1.8;
  b["grid"] = {{"nodes", 21}, {"half_width", 1.2}};
  b["output"] = {{"field", (scratch() / "blow").string()}};
  RunResult rb = run(parse_scenario(b));
  CHECK(rb.exit_code == 4);
  CHECK(rb.report["error"]["category"] == "numerical");

  json f = base("verify");
  f["seed"] = {{"kind", "inline"}, {"star", std::vector<double>(8, 0.05)}};
  RunResult rf = run(parse_scenario(f));
  CHECK(rf.exit_code == 1);
}

TEST_CASE("reports are deterministic and diff cleanly") {
  Scenario s = parse_scenario(base("hessian"));
  json a = run(s).report, b = run(s).report;
  CHECK(dump_report(strip_timing(a)) == dump_report(strip_timing(b)));
  json d = diff_reports(a, b);
  CHECK(d["deltas"].empty());
  CHECK(d["only_in_a"].empty());
  // Lossless round trip.
  CHECK(json::parse(dump_report(a)) == a);

  json other = run(parse_scenario(base("verify"))).report;
  CHECK_THROWS_AS(diff_reports(a, other), SchemaError);
}

TEST_CASE("halving h improves O(h^2) residuals by about four") {
  json d = base("verify");
  d["grid"] = {{"nodes", 21}, {"half_width", 0.3}};
  Scenario coarse = parse_scenario(d), fine = coarse;
  apply_overrides(fine, {coarse.grid->max_spacing() / 2.0, std::nullopt});
  CHECK(fine.grid->counts()[0] == 41);
  CHECK(fine.source["overrides"]["grid_h"] == doctest::Approx(0.015));
  json diff = diff_reports(run(coarse).report, run(fine).report);
  int seen = 0;
  for (const json& e : diff["deltas"]) {
    if (e["name"] == "hmf_residual" || e["name"] == "potentiality") {
      ++seen;
      CHECK(e["ratio"].get<double>() > 2.0);
    }
  }
  CHECK(seen == 2);
}

TEST_CASE("seed override") {
  Scenario s = parse_scenario(base("verify"));
  apply_overrides(s, {std::nullopt, 9});
  CHECK(s.seed.rng_seed == 9);
  CHECK(s.source["seed"]["rng_seed"] == 9);
  CHECK_THROWS_AS(apply_overrides(s, {-1.0, std::nullopt}), ScenarioError);
}

TEST_CASE("binary sidecars round trip") {
  fs::path dir = scratch();
  Chart c(2, -1.0, 0.6);
  Grid grid = Grid::cube(2, 21, 0.3);
  auto seed = solve_seed_algebra(2, metric_at(c, Point::Zero(2)), -1.0, 1);
  ProductField f = construct_field(c, seed, grid);
  write_field(dir / "rt", f);
  ProductField g = read_field(dir / "rt.json");
  CHECK(g.grid == f.grid);
  CHECK(g.base == f.base);
  CHECK(g.chart.kappa() == -1.0);
  for (std::size_t v = 0; v < grid.size(); ++v)
    for (std::size_t k = 0; k < f.star[v].size(); ++k) CHECK(g.star[v][k] == f.star[v][k]);
  CHECK(fs::file_size(dir / "rt.bin") == grid.size() * 8 * 8);
  CHECK_FALSE(fs::exists(dir / "rt.bin.tmp"));

  ConnectionField d = d_connection(f, 1);
  AffineChart a = build_affine_chart(c, d);
  PotentialField phi = solve_hessian_potential(c, d, a);
  write_potential(dir / "pot", c, phi);
  write_affine_chart(dir / "aff", c, a);
  PotentialField p2 = read_potential(dir / "pot.json");
  AffineChart a2 = read_affine_chart(dir / "aff.json");
  CHECK(p2.phi == phi.phi);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    CHECK((a2.jacobian[v] - a.jacobian[v]).norm() == 0.0);
    CHECK((a2.coords[v] - a.coords[v]).norm() == 0.0);
  }
  CHECK_THROWS_AS(read_potential(dir / "rt.json"), SchemaError);

  std::ofstream(dir / "trunc.bin", std::ios::binary) << "abc";
  json h = json::parse(std::ifstream(dir / "rt.json"));
  h["payload"] = "trunc.bin";
  std::ofstream(dir / "trunc.json") << h.dump();
  CHECK_THROWS_AS(read_field(dir / "trunc.json"), SchemaError);
}
