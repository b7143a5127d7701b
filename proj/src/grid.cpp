#include "fracbvp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fracbvp/errors.hpp"

namespace fracbvp {

Grid::Grid(double horizon, Index nodes) : horizon_(horizon), nodes_(nodes) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw DomainError("grid horizon must be finite and > 0");
  if (nodes < 3) throw SizeError("grid needs at least 3 nodes, got " + std::to_string(nodes));
}

double Grid::node(Index j) const {
  if (j == nodes_ - 1) return horizon_;
  return horizon_ * static_cast<double>(j) / static_cast<double>(nodes_ - 1);
}

VectorXd Grid::nodes() const {
  VectorXd t(nodes_);
  for (Index j = 0; j < nodes_; ++j) t[j] = node(j);
  return t;
}

Index Grid::nearest(double t) const {
  const double s = std::clamp(t, 0.0, horizon_) / step();
  return std::clamp<Index>(static_cast<Index>(std::lround(s)), 0, nodes_ - 1);
}

GridFunction::GridFunction(Grid g, MatrixXd v) : grid(g), values(std::move(v)) {
  if (values.cols() != grid.size())
    throw SizeError("grid function has " + std::to_string(values.cols()) +
                    " columns for a grid of " + std::to_string(grid.size()) + " nodes");
  if (!values.allFinite()) throw DomainError("grid function values must be finite");
}

GridFunction::GridFunction(Grid g, Index components)
    : grid(g), values(MatrixXd::Zero(components, g.size())) {}

VectorXd GridFunction::operator()(double t) const {
  if (t < 0.0 || t > grid.horizon()) throw DomainError("evaluation point outside [0, T]");
  const double s = t / grid.step();
  const Index left = std::min<Index>(static_cast<Index>(std::floor(s)), grid.size() - 2);
  const double w = s - static_cast<double>(left);
  return (1.0 - w) * values.col(left) + w * values.col(left + 1);
}

VectorXd GridFunction::sup_abs() const { return values.cwiseAbs().rowwise().maxCoeff(); }

VectorXd sup_diff(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid == b.grid) || a.components() != b.components())
    throw SizeError("sup_diff: incompatible grid functions");
  return (a.values - b.values).cwiseAbs().rowwise().maxCoeff();
}

}  // namespace fracbvp
