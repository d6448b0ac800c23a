#include "frobenius/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "frobenius/error.hpp"

namespace frob {

Grid::Grid(std::vector<int> counts, std::vector<double> lo, std::vector<double> hi)
    : counts_(std::move(counts)), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (counts_.empty() || counts_.size() != lo_.size() || counts_.size() != hi_.size())
    throw InputError("grid: counts, lo and hi must have the same non-zero length");
  strides_.assign(counts_.size(), 1);
  size_ = 1;
  for (int a = dim() - 1; a >= 0; --a) {
    auto ua = static_cast<std::size_t>(a);
    if (counts_[ua] < 1) throw InputError("grid: node counts must be positive");
    if (counts_[ua] > 1 && !(hi_[ua] > lo_[ua])) throw InputError("grid: box extents must satisfy lo < hi");
    strides_[ua] = size_;
    size_ *= static_cast<std::size_t>(counts_[ua]);
  }
}

Grid Grid::cube(int n, int count, double half_width) {
  return Grid(std::vector<int>(static_cast<std::size_t>(n), count),
              std::vector<double>(static_cast<std::size_t>(n), -half_width),
              std::vector<double>(static_cast<std::size_t>(n), half_width));
}

double Grid::spacing(int axis) const {
  auto a = static_cast<std::size_t>(axis);
  if (counts_[a] <= 1) return 0.0;
  return (hi_[a] - lo_[a]) / (counts_[a] - 1);
}

double Grid::max_spacing() const {
  double h = 0.0;
  for (int a = 0; a < dim(); ++a) h = std::max(h, spacing(a));
  return h;
}

std::vector<int> Grid::multi_index(std::size_t node) const {
  std::vector<int> idx(counts_.size());
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    idx[a] = static_cast<int>((node / strides_[a]) % static_cast<std::size_t>(counts_[a]));
  }
  return idx;
}

std::size_t Grid::flat_index(std::span<const int> idx) const {
  std::size_t node = 0;
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (idx[a] < 0 || idx[a] >= counts_[a]) throw InputError("grid: multi-index out of range");
    node += static_cast<std::size_t>(idx[a]) * strides_[a];
  }
  return node;
}

Point Grid::point(std::size_t node) const {
  Point x(dim());
  auto idx = multi_index(node);
  for (int a = 0; a < dim(); ++a) {
    auto ua = static_cast<std::size_t>(a);
    x(a) = lo_[ua] + spacing(a) * idx[ua];
  }
  return x;
}

std::ptrdiff_t Grid::neighbour(std::size_t node, int axis, int direction) const {
  auto a = static_cast<std::size_t>(axis);
  int i = static_cast<int>((node / strides_[a]) % static_cast<std::size_t>(counts_[a]));
  int j = i + direction;
  if (j < 0 || j >= counts_[a]) return -1;
  return static_cast<std::ptrdiff_t>(node) + direction * static_cast<std::ptrdiff_t>(strides_[a]);
}

std::vector<int> Grid::center() const {
  std::vector<int> c(counts_.size());
  for (std::size_t a = 0; a < counts_.size(); ++a) c[a] = counts_[a] / 2;
  return c;
}

std::size_t Grid::center_node() const {
  auto c = center();
  return flat_index(c);
}

TensorField::TensorField(Grid g, const Tensor& prototype)
    : grid(std::move(g)), values(grid.size(), prototype), valid(grid.size(), 1) {}

std::size_t TensorField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

ResidualField::ResidualField(Grid g) : grid(std::move(g)), values(grid.size(), 0.0), valid(grid.size(), 0) {}

double ResidualField::max() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (valid[i]) m = std::max(m, values[i]);
  return m;
}

std::size_t ResidualField::argmax() const {
  std::size_t best = values.size();
  double m = -1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (valid[i] && values[i] > m) {
      m = values[i];
      best = i;
    }
  }
  return best;
}

std::vector<std::size_t> ResidualField::exceeding(double tol) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (valid[i] && values[i] > tol) out.push_back(i);
  return out;
}

std::size_t ResidualField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

bool is_refinement(const Grid& coarse, const Grid& fine) {
  if (coarse.dim() != fine.dim()) return false;
  for (int a = 0; a < coarse.dim(); ++a) {
    auto ua = static_cast<std::size_t>(a);
    if (fine.counts()[ua] != 2 * coarse.counts()[ua] - 1) return false;
    if (fine.lo()[ua] != coarse.lo()[ua] || fine.hi()[ua] != coarse.hi()[ua]) return false;
  }
  return true;
}

double convergence_ratio(const ResidualField& coarse, const ResidualField& fine) {
  if (!is_refinement(coarse.grid, fine.grid)) throw InputError("convergence_ratio: fine grid is not a 2x refinement");
  double ec = 0.0, ef = 0.0;
  for (std::size_t v = 0; v < coarse.grid.size(); ++v) {
    if (!coarse.valid[v]) continue;
    auto idx = coarse.grid.multi_index(v);
    for (auto& i : idx) i *= 2;
    std::size_t w = fine.grid.flat_index(idx);
    if (!fine.valid[w]) continue;
    ec = std::max(ec, coarse.values[v]);
    ef = std::max(ef, fine.values[w]);
  }
  if (ef == 0.0) return ec == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return ec / ef;
}

}  // namespace frob
