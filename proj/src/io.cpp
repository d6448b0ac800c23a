#include "frobenius/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "frobenius/error.hpp"

namespace frob {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

double get(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw SchemaError("binary payload is truncated");
  std::uint64_t bits;
  std::memcpy(&bits, in.data() + pos, 8);
  pos += 8;
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path with_ext(const fs::path& stem, const char* ext) {
  fs::path p = stem;
  p += ext;
  return p;
}

void write_pair(const fs::path& stem, json header, const std::string& payload, std::size_t per_node) {
  header["schema"] = schema_version;
  header["payload"] = with_ext(stem, ".bin").filename().string();
  header["dtype"] = "float64";
  header["byte_order"] = "little";
  header["components_per_node"] = per_node;
  atomic_write(with_ext(stem, ".bin"), payload);
  atomic_write(with_ext(stem, ".json"), header.dump(2) + "\n");
}

struct Loaded {
  json header;
  std::string payload;
};

Loaded read_pair(const fs::path& header_path, const std::string& kind) {
  Loaded out;
  try {
    out.header = json::parse(slurp(header_path));
  } catch (const json::parse_error& e) {
    throw SchemaError(header_path.string() + ": " + e.what());
  }
  if (out.header.value("schema", 0) != schema_version) throw SchemaError(header_path.string() + ": unsupported schema");
  if (out.header.value("kind", "") != kind)
    throw SchemaError(header_path.string() + ": expected kind " + kind);
  if (out.header.value("dtype", "") != "float64" || out.header.value("byte_order", "") != "little")
    throw SchemaError(header_path.string() + ": payload must be little-endian float64");
  out.payload = slurp(header_path.parent_path() / out.header.at("payload").get<std::string>());
  return out;
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json chart_to_json(const Chart& chart) {
  return {{"dimension", chart.n()}, {"kappa", chart.kappa()}, {"domain_radius", chart.domain_radius()}};
}

Chart chart_from_json(const json& j) {
  return Chart(j.at("dimension").get<int>(), j.at("kappa").get<double>(), j.at("domain_radius").get<double>());
}

json grid_to_json(const Grid& grid) {
  return {{"nodes", grid.counts()}, {"lower", grid.lo()}, {"upper", grid.hi()}};
}

Grid grid_from_json(const json& j) {
  return Grid(j.at("nodes").get<std::vector<int>>(), j.at("lower").get<std::vector<double>>(),
              j.at("upper").get<std::vector<double>>());
}

void write_field(const fs::path& stem, const ProductField& field) {
  std::string payload;
  std::size_t per = field.star.empty() ? 0 : field.star.front().size();
  payload.reserve(field.star.size() * per * 8);
  for (const Tensor& t : field.star)
    for (std::size_t c = 0; c < t.size(); ++c) put(payload, t[c]);
  json h = {{"kind", "product_field"},
            {"chart", chart_to_json(field.chart)},
            {"grid", grid_to_json(field.grid)},
            {"base", field.base},
            {"layout", "star[i][j][k] = (e_i * e_j)^k"}};
  write_pair(stem, h, payload, per);
}

ProductField read_field(const fs::path& header) {
  Loaded l = read_pair(header, "product_field");
  Chart chart = chart_from_json(l.header.at("chart"));
  Grid grid = grid_from_json(l.header.at("grid"));
  int n = chart.n();
  if (grid.dim() != n) throw SchemaError("field grid dimension does not match chart");
  std::size_t per = static_cast<std::size_t>(n) * n * n;
  if (l.header.at("components_per_node").get<std::size_t>() != per || l.payload.size() != grid.size() * per * 8)
    throw SchemaError("field payload size does not match the header");
  ProductField f{chart, grid, l.header.at("base").get<std::size_t>(), {}};
  f.star.reserve(grid.size());
  std::size_t pos = 0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    Tensor t = Tensor::product(n);
    for (std::size_t c = 0; c < per; ++c) t[c] = get(l.payload, pos);
    f.star.push_back(std::move(t));
  }
  return f;
}

void write_potential(const fs::path& stem, const Chart& chart, const PotentialField& phi) {
  std::string payload;
  for (double v : phi.phi) put(payload, v);
  json h = {{"kind", "potential"},
            {"chart", chart_to_json(chart)},
            {"grid", grid_to_json(phi.grid)},
            {"role", phi.role == PotentialRole::hessian_potential ? "hessian_potential" : "frobenius_potential"}};
  write_pair(stem, h, payload, 1);
}

PotentialField read_potential(const fs::path& header) {
  Loaded l = read_pair(header, "potential");
  PotentialField p;
  p.grid = grid_from_json(l.header.at("grid"));
  std::string role = l.header.at("role").get<std::string>();
  if (role == "hessian_potential")
    p.role = PotentialRole::hessian_potential;
  else if (role == "frobenius_potential")
    p.role = PotentialRole::frobenius_potential;
  else
    throw SchemaError("unknown potential role " + role);
  if (l.payload.size() != p.grid.size() * 8) throw SchemaError("potential payload size does not match the header");
  std::size_t pos = 0;
  for (std::size_t v = 0; v < p.grid.size(); ++v) p.phi.push_back(get(l.payload, pos));
  return p;
}

void write_affine_chart(const fs::path& stem, const Chart& chart, const AffineChart& affine) {
  int n = affine.grid.dim();
  std::string payload;
  for (std::size_t v = 0; v < affine.grid.size(); ++v) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) put(payload, affine.jacobian[v](r, c));
    for (int r = 0; r < n; ++r) put(payload, affine.coords[v](r));
  }
  json h = {{"kind", "affine_chart"},
            {"chart", chart_to_json(chart)},
            {"grid", grid_to_json(affine.grid)},
            {"base", affine.base},
            {"path_disagreement", affine.path_disagreement}};
  write_pair(stem, h, payload, static_cast<std::size_t>(n) * (n + 1));
}

AffineChart read_affine_chart(const fs::path& header) {
  Loaded l = read_pair(header, "affine_chart");
  AffineChart a;
  a.grid = grid_from_json(l.header.at("grid"));
  a.base = l.header.at("base").get<std::size_t>();
  a.path_disagreement = l.header.at("path_disagreement").get<double>();
  int n = a.grid.dim();
  if (l.payload.size() != a.grid.size() * n * (n + 1) * 8) throw SchemaError("affine payload size does not match the header");
  std::size_t pos = 0;
  for (std::size_t v = 0; v < a.grid.size(); ++v) {
    Mat j(n, n);
    Vec y(n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) j(r, c) = get(l.payload, pos);
    for (int r = 0; r < n; ++r) y(r) = get(l.payload, pos);
    a.jacobian.push_back(j);
    a.coords.push_back(y);
  }
  a.pullback = ResidualField(a.grid);
  return a;
}

}  // namespace frob
