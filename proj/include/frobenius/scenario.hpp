#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "frobenius/prolongation.hpp"
#include "frobenius/tolerances.hpp"

namespace frob {

inline constexpr const char* version_string = "0.1.0";

/// Malformed or invalid scenario document; `where` is the JSON path.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

enum class Mode { verify, construct, classify, hessian, bridge };

struct SeedSpec {
  /// solver | inline | zero | idempotent | radial_skew | field
  std::string kind = "solver";
  std::uint64_t rng_seed = 0;
  int candidates = 8;
  std::vector<double> star;         // inline: n³ values, star[i][j][k]
  std::vector<double> idempotent;   // idempotent: weights c_i, e_i ★ e_j = δ_ij c_i e_i
  std::vector<double> center;       // radial_skew
  std::string path;                 // field: header path relative to the scenario
  bool negate = false;
};

struct Scenario {
  nlohmann::json source;
  std::filesystem::path dir;
  Mode mode = Mode::verify;
  int dimension = 0;
  double kappa = 0.0;
  double domain_radius = 0.0;
  std::optional<Grid> grid;
  SeedSpec seed;
  ConstructOptions construct;
  Tolerances tolerances;
  int gauge_shifts = 3;
  std::uint64_t gauge_seed = 1;
  std::string report_path;
  std::string field_path;
  std::string potential_path;

  Chart chart() const { return Chart(dimension, kappa, domain_radius); }
};

std::string to_string(Mode mode);

Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& dir = {});
/// Throws ScenarioError for unreadable files and JSON syntax errors.
Scenario load_scenario(const std::filesystem::path& path);

struct RunOverrides {
  std::optional<double> grid_h;
  std::optional<std::uint64_t> rng_seed;
};

void apply_overrides(Scenario& scenario, const RunOverrides& overrides);

struct RunResult {
  nlohmann::json report;
  int exit_code = 0;
};

/// Exit codes: 0 success, 1 check failure, 3 precondition error, 4 numerical
/// failure. Parse errors (2) surface as ScenarioError before a run starts.
RunResult run(const Scenario& scenario);

/// Per-check deltas for checks whose residual differs. Throws SchemaError on
/// schema or mode mismatch.
nlohmann::json diff_reports(const nlohmann::json& a, const nlohmann::json& b);

/// Report serialization: sorted keys, two-space indent.
std::string dump_report(const nlohmann::json& report);

}  // namespace frob
