#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracbvp/iterate.hpp"
#include "fracbvp/problem.hpp"

namespace fracbvp {

/// Column-labelled numeric table, written as CSV with 17 significant digits.
struct Table {
  std::vector<std::string> header;
  MatrixXd rows;

  void write_csv(std::ostream& out) const;
};

/// Shortest text that round-trips a double (%.17g).
std::string format_number(double value);

struct ResidualReport {
  /// cD^p u_m - f(t, u_m), minus Delta_m when it is included, at every node
  /// (the L1 Caputo scheme with the known slope chi1 at t = 0).
  GridFunction residual;
  /// Componentwise max over the interior nodes 2 .. N-3, which stay clear of
  /// the extrapolated first node and the last-node boundary pinning.
  VectorXd sup_residual;
  VectorXd boundary_start;
  VectorXd boundary_end;
  /// Delta_m at the iterate's chi1; present iff it was subtracted.
  std::optional<VectorXd> delta;
};

/// How well an iterate satisfies the differential equation and the
/// boundary conditions.
ResidualReport residuals(const Problem& prob, const ApproxSolution& approx, bool include_delta = false);

/// Scalar problems only: columns t, u_0, ..., u_m, f (f(t, u_m)) and caputo
/// (cD^p u_m), one row per grid node.
Table emit_figure_data(const Problem& prob, const ApproxSolution& approx);

}  // namespace fracbvp
