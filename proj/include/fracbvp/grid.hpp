#pragma once

#include <Eigen/Dense>

namespace fracbvp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Uniform grid t_j = j T / (N - 1), j = 0..N-1, on [0, T].
class Grid {
 public:
  Grid(double horizon, Index nodes);

  double horizon() const { return horizon_; }
  Index size() const { return nodes_; }
  double step() const { return horizon_ / static_cast<double>(nodes_ - 1); }

  /// Node j; node(0) == 0 and node(size() - 1) == horizon() exactly.
  double node(Index j) const;
  VectorXd nodes() const;

  /// Index of the node nearest to t (t clamped to [0, T]).
  Index nearest(double t) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double horizon_;
  Index nodes_;
};

/// Vector-valued function sampled on a grid: values is n x N, one column per
/// node. Evaluation between nodes is piecewise linear.
struct GridFunction {
  Grid grid;
  MatrixXd values;

  GridFunction(Grid g, MatrixXd v);
  /// Zero function with n components.
  GridFunction(Grid g, Index components);

  Index components() const { return values.rows(); }
  auto at(Index j) const { return values.col(j); }
  VectorXd operator()(double t) const;

  /// Componentwise max over nodes of |values|.
  VectorXd sup_abs() const;
};

/// Componentwise max_t |a - b|; grids must match.
VectorXd sup_diff(const GridFunction& a, const GridFunction& b);

}  // namespace fracbvp
