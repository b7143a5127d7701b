#include "fracbvp/fracops.hpp"

#include <cmath>
#include <string>

namespace fracbvp {

namespace {

void require_order(double p, const char* where) {
  if (!(p > 1.0 && p <= 2.0))
    throw DomainError(std::string(where) + ": order p outside (1,2]");
}

}  // namespace

FractionalIntegrator::FractionalIntegrator(const Grid& grid, double order)
    : grid_(grid), order_(order) {
  if (!(order > 0.0) || !std::isfinite(order))
    throw DomainError("fractional integral order must be finite and > 0");
  const Index n = grid.size();
  scale_ = std::pow(grid.step(), order) / gamma(order + 2.0);
  start_ = VectorXd::Zero(n);
  interior_ = VectorXd::Zero(n);
  for (Index j = 1; j < n; ++j) {
    start_[j] = product_trapezoid_start(j, order);
    interior_[j] = product_trapezoid_interior(j, order);
  }
}

VectorXd FractionalIntegrator::weights(Index j) const {
  if (j < 0 || j >= grid_.size()) throw DomainError("node index outside grid");
  VectorXd w = VectorXd::Zero(j + 1);
  if (j == 0) return w;
  w[0] = start_[j];
  for (Index k = 1; k < j; ++k) w[k] = interior_[j - k];
  w[j] = 1.0;
  return scale_ * w;
}

VectorXd FractionalIntegrator::at(const GridFunction& g, Index j) const {
  if (!(g.grid == grid_)) throw SizeError("grid function lives on a different grid");
  if (j < 0 || j >= grid_.size()) throw DomainError("node index outside grid");
  if (j == 0) return VectorXd::Zero(g.components());
  VectorXd acc = start_[j] * g.values.col(0) + g.values.col(j);
  for (Index k = 1; k < j; ++k) acc += interior_[j - k] * g.values.col(k);
  return scale_ * acc;
}

GridFunction FractionalIntegrator::apply(const GridFunction& g) const {
  if (!(g.grid == grid_)) throw SizeError("grid function lives on a different grid");
  const Index n = grid_.size();
  MatrixXd out = MatrixXd::Zero(g.components(), n);
  for (Index j = 1; j < n; ++j) {
    VectorXd acc = start_[j] * g.values.col(0) + g.values.col(j);
    for (Index k = 1; k < j; ++k) acc.noalias() += interior_[j - k] * g.values.col(k);
    out.col(j) = scale_ * acc;
  }
  return {grid_, std::move(out)};
}

VectorXd frac_integral(const GridFunction& g, double p, Index t_index) {
  require_order(p, "frac_integral");
  if (t_index < 0 || t_index >= g.grid.size()) throw DomainError("frac_integral: node index outside grid");
  const VectorXd w = product_trapezoid_weights(t_index, g.grid.step(), p);
  return g.values.leftCols(t_index + 1) * w;
}

GridFunction boundary_corrected_integral(const FractionalIntegrator& integral, const GridFunction& g) {
  GridFunction out = integral.apply(g);
  const Grid& grid = integral.grid();
  const double T = grid.horizon();
  const double p = integral.order();
  const VectorXd at_end = out.values.col(grid.size() - 1);
  for (Index j = 0; j < grid.size(); ++j)
    out.values.col(j) -= std::pow(grid.node(j) / T, p) * at_end;
  return out;
}

GridFunction caputo_derivative(const GridFunction& u, double p, const std::optional<VectorXd>& initial_slope) {
  require_order(p, "caputo_derivative");
  const Grid& grid = u.grid;
  const Index n = grid.size();
  if (n < 5) throw SizeError("caputo_derivative needs at least 5 nodes");
  const double h = grid.step();

  VectorXd slope0;
  if (initial_slope) {
    if (initial_slope->size() != u.components()) throw SizeError("initial slope has wrong size");
    slope0 = *initial_slope;
  } else {
    slope0 = (-3.0 * u.values.col(0) + 4.0 * u.values.col(1) - u.values.col(2)) / (2.0 * h);
  }

  // b_k = (k+1)^(2-p) - k^(2-p)
  const double e = 2.0 - p;
  VectorXd b(n);
  for (Index k = 0; k < n; ++k)
    b[k] = std::pow(static_cast<double>(k + 1), e) - std::pow(static_cast<double>(k), e);

  // diffs.col(k-1) = (u_k - u_{k-1}) / h
  const MatrixXd diffs =
      (u.values.rightCols(n - 1) - u.values.leftCols(n - 1)) / h;
  const double scale = std::pow(h, 1.0 - p) / gamma(3.0 - p);

  MatrixXd out = MatrixXd::Zero(u.components(), n);
  for (Index m = 1; m < n; ++m) {
    VectorXd acc = b[0] * diffs.col(m - 1) - b[m - 1] * slope0;
    for (Index k = 1; k < m; ++k) acc.noalias() -= (b[m - k - 1] - b[m - k]) * diffs.col(k - 1);
    out.col(m) = scale * acc;
  }
  out.col(0) = 2.0 * out.col(1) - out.col(2);
  return {grid, std::move(out)};
}

VectorXd kernel_estimate_operator(const Grid& grid, double p, const VectorXd& g) {
  require_order(p, "kernel_estimate_operator");
  const Index n = grid.size();
  if (g.size() != n) throw SizeError("kernel_estimate_operator: sample count != grid size");
  const double T = grid.horizon();
  const double h = grid.step();

  const FractionalIntegrator integral(grid, p);
  const GridFunction gf(grid, g.transpose());
  const VectorXd forward = integral.apply(gf).values.row(0).transpose();

  // head_mass[j] = (1/Gamma(p)) int_0^{t_j} (T-s)^(p-1) g(s) ds, piecewise-linear g
  VectorXd head_mass = VectorXd::Zero(n);
  const double gp = gamma(p);
  for (Index k = 0; k + 1 < n; ++k) {
    const double far = T - grid.node(k);
    const double near = T - grid.node(k + 1);
    const double m0 = (std::pow(far, p) - std::pow(near, p)) / p;
    const double m1 = (std::pow(far, p + 1.0) - std::pow(near, p + 1.0)) / (p + 1.0);
    const double w_left = (m1 - near * m0) / h;
    const double w_right = (far * m0 - m1) / h;
    head_mass[k + 1] = head_mass[k] + (w_left * g[k] + w_right * g[k + 1]) / gp;
  }
  const double total = head_mass[n - 1];

  VectorXd out(n);
  for (Index j = 0; j < n; ++j) {
    const double ratio = std::pow(grid.node(j) / T, p);
    out[j] = forward[j] - ratio * head_mass[j] + ratio * (total - head_mass[j]);
  }
  return out;
}

VectorXd alpha1_on_grid(const Grid& grid, double p) {
  VectorXd a(grid.size());
  for (Index j = 0; j < grid.size(); ++j) a[j] = alpha1(grid.node(j), 0.0, grid.horizon(), p);
  return a;
}

}  // namespace fracbvp
