#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "frobenius/error.hpp"
#include "frobenius/io.hpp"
#include "frobenius/scenario.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw frob::ScenarioError(path, "cannot open");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw frob::ScenarioError(path, e.what());
  }
}

void print_summary(const nlohmann::json& r) {
  for (const auto& c : r["checks"]) {
    auto num = [](const nlohmann::json& v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3e", v.is_null() ? HUGE_VAL : v.get<double>());
      return std::string(buf);
    };
    std::string res = num(c["residual"]), tol = num(c["tolerance"]);
    std::printf("%-4s %-30s %14s  (%s %s)%s\n", c["passed"].get<bool>() ? "ok" : "FAIL",
                c["name"].get<std::string>().c_str(), res.c_str(), c["bound"] == "lower" ? ">=" : "<=", tol.c_str(),
                c["diagnostic"].get<bool>() ? " [diagnostic]" : "");
  }
  if (!r["label"].is_null()) std::printf("label: %s\n", r["label"].get<std::string>().c_str());
  if (!r["error"].is_null()) std::printf("error: %s\n", r["error"]["message"].get<std::string>().c_str());
  std::printf("exit %d\n", r["exit_code"].get<int>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curved Frobenius and Hesse-Frobenius structure toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  std::optional<double> grid_h;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a scenario and write its report");
  run->add_option("scenario", scenario_path, "Scenario JSON")->required();
  run->add_option("--out", out_path, "Report path (default: the scenario's output.report, else stdout)");
  run->add_option("--grid-h", grid_h, "Override grid spacing");
  run->add_option("--seed", seed, "Override seed.rng_seed");
  run->add_flag("--quiet", quiet, "No summary on stdout");

  std::string diff_a, diff_b;
  auto* diff = app.add_subcommand("diff", "Per-check residual deltas between two reports");
  diff->add_option("a", diff_a)->required();
  diff->add_option("b", diff_b)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*diff) {
    try {
      std::cout << frob::diff_reports(read_json(diff_a), read_json(diff_b)).dump(2) << "\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "frobenius diff: " << e.what() << "\n";
      return 2;
    }
  }

  frob::Scenario scenario;
  try {
    scenario = frob::load_scenario(scenario_path);
    frob::apply_overrides(scenario, {grid_h, seed});
  } catch (const frob::ScenarioError& e) {
    std::cerr << "frobenius: invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const frob::Error& e) {
    std::cerr << "frobenius: invalid scenario: " << e.what() << "\n";
    return 2;
  }

  frob::RunResult result = frob::run(scenario);
  std::string text = frob::dump_report(result.report);
  std::string dest = out_path;
  if (dest.empty() && !scenario.report_path.empty()) dest = (scenario.dir / scenario.report_path).string();
  try {
    if (dest.empty()) {
      if (!quiet) std::cout << text;
    } else {
      frob::atomic_write(dest, text);
      if (!quiet) print_summary(result.report);
    }
  } catch (const std::exception& e) {
    std::cerr << "frobenius: " << e.what() << "\n";
    return 3;
  }
  return result.exit_code;
}
