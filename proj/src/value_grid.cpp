#include "dgame/value_grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "dgame/errors.hpp"

namespace dgame {

namespace {

constexpr std::size_t kMaxDim = 8;

bool is_uniform(const Vec& axis) {
  const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs((axis[i] - axis[i - 1]) - step) > 1e-12 * std::max(1.0, std::abs(step)))
      return false;
  return true;
}

}  // namespace

Grid::Grid(std::vector<Vec> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw InvalidInput("grid needs at least one axis");
  if (axes_.size() > kMaxDim)
    throw InvalidInput("grid dimension " + std::to_string(axes_.size()) + " exceeds " +
                       std::to_string(kMaxDim));
  strides_.assign(axes_.size(), 1);
  inv_step_.assign(axes_.size(), 0.0);
  node_count_ = 1;
  for (std::size_t d = axes_.size(); d-- > 0;) {
    const Vec& a = axes_[d];
    if (a.size() < 2) throw InvalidInput("grid axis " + std::to_string(d) + " needs >= 2 nodes");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(a[i])) throw InvalidInput("grid axis has a non-finite node");
      if (i > 0 && !(a[i] > a[i - 1]))
        throw InvalidInput("grid axis " + std::to_string(d) + " is not strictly increasing");
    }
    if (is_uniform(a))
      inv_step_[d] = static_cast<double>(a.size() - 1) / (a.back() - a.front());
    strides_[d] = node_count_;
    node_count_ *= a.size();
  }
}

Grid Grid::uniform(const Box& box, std::span<const int> nodes_per_dim) {
  validate_box(box, "grid box");
  if (nodes_per_dim.size() != box.dim())
    throw InvalidInput("grid: nodes per dimension does not match box dimension");
  std::vector<Vec> axes(box.dim());
  for (std::size_t d = 0; d < box.dim(); ++d) {
    const int count = nodes_per_dim[d];
    if (count < 2) throw InvalidInput("grid axis " + std::to_string(d) + " needs >= 2 nodes");
    Vec& a = axes[d];
    a.resize(count);
    const double lo = box.lower[d], hi = box.upper[d];
    for (int i = 0; i < count; ++i)
      a[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    a.back() = hi;
  }
  return Grid(std::move(axes));
}

Box Grid::box() const {
  Box b;
  for (const auto& a : axes_) {
    b.lower.push_back(a.front());
    b.upper.push_back(a.back());
  }
  return b;
}

void Grid::node(std::size_t flat, std::span<double> out) const {
  for (std::size_t d = 0; d < dim(); ++d) out[d] = axes_[d][axis_index(flat, d)];
}

Vec Grid::node(std::size_t flat) const {
  Vec x(dim());
  node(flat, x);
  return x;
}

void Grid::locate(std::span<const double> x, std::span<std::size_t> cell,
                  std::span<double> weight) const {
  if (x.size() != dim())
    throw InvalidInput("point has dimension " + std::to_string(x.size()) + ", grid has " +
                       std::to_string(dim()));
  for (std::size_t d = 0; d < dim(); ++d) {
    const Vec& a = axes_[d];
    const std::size_t last = a.size() - 2;
    const double xc = std::clamp(x[d], a.front(), a.back());
    std::size_t i;
    if (inv_step_[d] > 0.0) {
      const double t = (xc - a.front()) * inv_step_[d];
      i = std::min(static_cast<std::size_t>(std::max(t, 0.0)), last);
      while (i > 0 && xc < a[i]) --i;
      while (i < last && xc >= a[i + 1]) ++i;
    } else {
      const auto it = std::upper_bound(a.begin(), a.end(), xc);
      i = std::min(static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - a.begin() - 1, 0)), last);
    }
    cell[d] = i;
    weight[d] = (xc - a[i]) / (a[i + 1] - a[i]);
  }
}

namespace {

// Exact at w = 0, at w = 1 and when a == b.
inline double lerp(double a, double b, double w) {
  return w < 0.5 ? a + w * (b - a) : b - (1.0 - w) * (b - a);
}

}  // namespace

Stencil make_stencil(const Grid& grid, std::span<const double> x) {
  const std::size_t n = grid.dim();
  std::array<std::size_t, kMaxDim> cell{};
  std::array<double, kMaxDim> w{};
  grid.locate(x, std::span(cell.data(), n), std::span(w.data(), n));
  Stencil s;
  const std::size_t corners = std::size_t{1} << n;
  s.nodes.resize(corners);
  s.weights.resize(corners);
  for (std::size_t c = 0; c < corners; ++c) {
    std::size_t idx = 0;
    double weight = 1.0;
    for (std::size_t d = 0; d < n; ++d) {
      const bool up = (c >> d) & 1U;
      idx += (cell[d] + (up ? 1 : 0)) * grid.stride(d);
      weight *= up ? w[d] : 1.0 - w[d];
    }
    s.nodes[c] = idx;
    s.weights[c] = weight;
  }
  return s;
}

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(Grid grid, Vec values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.node_count())
    throw InvalidInput("grid function has " + std::to_string(values_.size()) +
                       " values for " + std::to_string(grid_.node_count()) + " nodes");
  if (!all_finite(values_)) throw InvalidInput("grid function has non-finite values");
}

GridFunction GridFunction::constant(const Grid& grid, double value) {
  return GridFunction(grid, Vec(grid.node_count(), value));
}

GridFunction GridFunction::sample(const Grid& grid,
                                  const std::function<double(std::span<const double>)>& fn) {
  Vec values(grid.node_count());
  Vec x(grid.dim());
  for (std::size_t k = 0; k < values.size(); ++k) {
    grid.node(k, x);
    values[k] = fn(x);
  }
  return GridFunction(grid, std::move(values));
}

double GridFunction::interpolate(std::span<const double> x) const {
  const std::size_t n = grid_.dim();
  std::array<std::size_t, kMaxDim> cell{};
  std::array<double, kMaxDim> w{};
  grid_.locate(x, std::span(cell.data(), n), std::span(w.data(), n));
  if (n == 1) {
    const double a = values_[cell[0]];
    return lerp(a, values_[cell[0] + 1], w[0]);
  }
  // Nested lerps, one axis at a time, so equal corner values come back exactly.
  std::array<double, std::size_t{1} << kMaxDim> corner;
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t c = 0; c < corners; ++c) {
    std::size_t idx = 0;
    for (std::size_t d = 0; d < n; ++d) idx += (cell[d] + ((c >> d) & 1U)) * grid_.stride(d);
    corner[c] = values_[idx];
  }
  for (std::size_t d = 0, len = corners; d < n; ++d, len /= 2)
    for (std::size_t c = 0; c < len / 2; ++c)
      corner[c] = lerp(corner[2 * c], corner[2 * c + 1], w[d]);
  return corner[0];
}

// ---------------------------------------------------------------------------
// StrategyField

StrategyField::StrategyField(Grid grid, Box control_box, Vec controls)
    : grid_(std::move(grid)), control_box_(std::move(control_box)), controls_(std::move(controls)) {
  validate_box(control_box_, "strategy control box");
  const std::size_t m = control_box_.dim();
  if (controls_.size() != grid_.node_count() * m)
    throw InvalidInput("strategy field has " + std::to_string(controls_.size()) +
                       " entries, expected " + std::to_string(grid_.node_count() * m));
  if (!all_finite(controls_)) throw InvalidInput("strategy field has non-finite controls");
  for (std::size_t k = 0; k < grid_.node_count(); ++k)
    if (!control_box_.contains(at(k)))
      throw InvalidInput("strategy control at node " + std::to_string(k) +
                         " lies outside the control box");
}

StrategyField StrategyField::constant(const Grid& grid, const Box& control_box,
                                      std::span<const double> control) {
  Vec controls;
  controls.reserve(grid.node_count() * control.size());
  for (std::size_t k = 0; k < grid.node_count(); ++k)
    controls.insert(controls.end(), control.begin(), control.end());
  return StrategyField(grid, control_box, std::move(controls));
}

StrategyField StrategyField::sample(const Grid& grid, const Box& control_box,
                                    const std::function<Vec(std::span<const double>)>& fn) {
  const std::size_t m = control_box.dim();
  Vec controls(grid.node_count() * m);
  Vec x(grid.dim());
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    grid.node(k, x);
    Vec u = fn(x);
    if (u.size() != m) throw InvalidInput("strategy sample returned wrong control dimension");
    control_box.clamp(u);
    std::copy(u.begin(), u.end(), controls.begin() + static_cast<std::ptrdiff_t>(k * m));
  }
  return StrategyField(grid, control_box, std::move(controls));
}

void StrategyField::interpolate(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = grid_.dim();
  const std::size_t m = control_dim();
  std::array<std::size_t, kMaxDim> cell{};
  std::array<double, kMaxDim> w{};
  grid_.locate(x, std::span(cell.data(), n), std::span(w.data(), n));
  const std::size_t corners = std::size_t{1} << n;
  std::array<std::size_t, std::size_t{1} << kMaxDim> idx;
  for (std::size_t c = 0; c < corners; ++c) {
    idx[c] = 0;
    for (std::size_t d = 0; d < n; ++d) idx[c] += (cell[d] + ((c >> d) & 1U)) * grid_.stride(d);
  }
  std::array<double, std::size_t{1} << kMaxDim> corner;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t c = 0; c < corners; ++c) corner[c] = controls_[idx[c] * m + j];
    for (std::size_t d = 0, len = corners; d < n; ++d, len /= 2)
      for (std::size_t c = 0; c < len / 2; ++c)
        corner[c] = lerp(corner[2 * c], corner[2 * c + 1], w[d]);
    out[j] = corner[0];
  }
  control_box_.clamp(out);
}

Vec StrategyField::interpolate(std::span<const double> x) const {
  Vec out(control_dim());
  interpolate(x, out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <typename EdgeDiff>
double max_edge_quotient(const Grid& grid, EdgeDiff diff) {
  double best = 0.0;
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    for (std::size_t d = 0; d < grid.dim(); ++d) {
      const std::size_t i = grid.axis_index(k, d);
      if (i + 1 >= grid.axis(d).size()) continue;
      const double h = grid.axis(d)[i + 1] - grid.axis(d)[i];
      best = std::max(best, diff(k, k + grid.stride(d)) / h);
    }
  }
  return best;
}

}  // namespace

double lipschitz_estimate(const GridFunction& f) {
  return max_edge_quotient(f.grid(), [&](std::size_t a, std::size_t b) {
    return std::abs(f.at(a) - f.at(b));
  });
}

double lipschitz_estimate(const StrategyField& f) {
  return max_edge_quotient(f.grid(), [&](std::size_t a, std::size_t b) {
    return distance2(f.at(a), f.at(b));
  });
}

double strategy_lipschitz(const StrategyField& f) {
  return std::sqrt(static_cast<double>(f.grid().dim())) * lipschitz_estimate(f);
}

double sup_diff(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid())) throw InvalidInput("sup_diff: grid functions live on different grids");
  double best = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    best = std::max(best, std::abs(a.at(k) - b.at(k)));
  return best;
}

double sup_diff(const StrategyField& a, const StrategyField& b) {
  if (!(a.grid() == b.grid()) || a.control_dim() != b.control_dim())
    throw InvalidInput("sup_diff: strategy fields live on different grids");
  double best = 0.0;
  for (std::size_t k = 0; k < a.grid().node_count(); ++k)
    best = std::max(best, distance2(a.at(k), b.at(k)));
  return best;
}

}  // namespace dgame
