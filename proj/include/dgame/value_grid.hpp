#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dgame/common.hpp"

namespace dgame {

// Tensor-product grid over a box. Nodes are stored row-major: the last
// coordinate varies fastest.
class Grid {
 public:
  // Each axis needs >= 2 strictly increasing nodes.
  explicit Grid(std::vector<Vec> axes);
  static Grid uniform(const Box& box, std::span<const int> nodes_per_dim);

  std::size_t dim() const { return axes_.size(); }
  std::size_t node_count() const { return node_count_; }
  const Vec& axis(std::size_t d) const { return axes_[d]; }
  const std::vector<Vec>& axes() const { return axes_; }
  Box box() const;

  void node(std::size_t flat, std::span<double> out) const;
  Vec node(std::size_t flat) const;
  std::size_t stride(std::size_t d) const { return strides_[d]; }
  // Index of the node along axis d.
  std::size_t axis_index(std::size_t flat, std::size_t d) const {
    return (flat / strides_[d]) % axes_[d].size();
  }

  // Cell containing x (after clamping into the box) and the local weight of
  // the upper corner along each axis, in [0, 1]. Weight is exactly 0 at a node.
  void locate(std::span<const double> x, std::span<std::size_t> cell,
              std::span<double> weight) const;

  friend bool operator==(const Grid& a, const Grid& b) { return a.axes_ == b.axes_; }

 private:
  std::vector<Vec> axes_;
  std::vector<std::size_t> strides_;
  std::vector<double> inv_step_;  // > 0 only for uniform axes
  std::size_t node_count_ = 0;
};

// Corner indices and weights of a multilinear interpolation stencil.
struct Stencil {
  std::vector<std::size_t> nodes;
  std::vector<double> weights;
};
Stencil make_stencil(const Grid& grid, std::span<const double> x);

// Scalar field sampled at the grid nodes.
class GridFunction {
 public:
  GridFunction(Grid grid, Vec values);
  static GridFunction constant(const Grid& grid, double value);
  static GridFunction sample(const Grid& grid,
                             const std::function<double(std::span<const double>)>& fn);

  const Grid& grid() const { return grid_; }
  const Vec& values() const { return values_; }
  double at(std::size_t node) const { return values_[node]; }

  // Multilinear interpolation; points outside the box are clamped first.
  double interpolate(std::span<const double> x) const;

 private:
  Grid grid_;
  Vec values_;
};

// Feedback strategy: one control vector per node, each inside the control box.
class StrategyField {
 public:
  StrategyField(Grid grid, Box control_box, Vec controls);
  static StrategyField constant(const Grid& grid, const Box& control_box,
                                std::span<const double> control);
  // Samples fn at the nodes, clamping each result into the control box.
  static StrategyField sample(const Grid& grid, const Box& control_box,
                              const std::function<Vec(std::span<const double>)>& fn);

  const Grid& grid() const { return grid_; }
  const Box& control_box() const { return control_box_; }
  std::size_t control_dim() const { return control_box_.dim(); }
  const Vec& controls() const { return controls_; }
  std::span<const double> at(std::size_t node) const {
    return std::span<const double>(controls_).subspan(node * control_dim(), control_dim());
  }

  // Multilinear interpolation, clamped into the control box.
  void interpolate(std::span<const double> x, std::span<double> out) const;
  Vec interpolate(std::span<const double> x) const;

 private:
  Grid grid_;
  Box control_box_;
  Vec controls_;
};

// Largest difference quotient between adjacent nodes over all axes. For the
// multilinear interpolant this is the Lipschitz constant with respect to the
// l1 distance on states (Euclidean norm on control vectors); the Euclidean
// state constant is at most sqrt(dim) times larger.
double lipschitz_estimate(const GridFunction& f);
double lipschitz_estimate(const StrategyField& f);

// sqrt(dim) * lipschitz_estimate: a Lipschitz constant for Euclidean state
// distances, the form the consistency estimates use.
double strategy_lipschitz(const StrategyField& f);

// max over nodes of |a - b|. Throws InvalidInput on grid mismatch.
double sup_diff(const GridFunction& a, const GridFunction& b);
double sup_diff(const StrategyField& a, const StrategyField& b);

}  // namespace dgame
