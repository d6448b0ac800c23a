#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "frobenius/hessian.hpp"
#include "frobenius/prolongation.hpp"

namespace frob {

inline constexpr int schema_version = 1;

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

nlohmann::json chart_to_json(const Chart& chart);
Chart chart_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

/// Binary sidecars: `<stem>.json` | `<stem>.bin`, the payload being
/// little-endian float64 per node in row-major component order.
void write_field(const std::filesystem::path& stem, const ProductField& field);
ProductField read_field(const std::filesystem::path& header);

void write_potential(const std::filesystem::path& stem, const Chart& chart, const PotentialField& phi);
PotentialField read_potential(const std::filesystem::path& header);

/// Payload per node: θ (n×n row-major) followed by y (n).
void write_affine_chart(const std::filesystem::path& stem, const Chart& chart, const AffineChart& affine);
AffineChart read_affine_chart(const std::filesystem::path& header);

}  // namespace frob
