#include "fracbvp/verify.hpp"

#include <cstdio>
#include <ostream>

#include "fracbvp/determine.hpp"
#include "fracbvp/errors.hpp"
#include "fracbvp/fracops.hpp"

namespace fracbvp {

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void Table::write_csv(std::ostream& out) const {
  if (static_cast<Index>(header.size()) != rows.cols()) throw SizeError("table header and columns disagree");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_number(rows(r, c));
    out << '\n';
  }
}

ResidualReport residuals(const Problem& prob, const ApproxSolution& approx, bool include_delta) {
  const GridFunction& u = approx.last();
  const Grid& grid = u.grid;
  if (grid.size() < 6) throw SizeError("residuals need at least 6 grid nodes");
  const SuccessiveApproximation map(prob);
  const GridFunction caputo = caputo_derivative(u, prob.p, approx.chi1);
  const GridFunction f = map.rhs_on_grid(u);

  ResidualReport out{GridFunction(grid, caputo.values - f.values), {}, {}, {}, std::nullopt};
  if (include_delta) {
    out.delta = delta_m(prob, approx);
    out.residual.values.colwise() -= *out.delta;
  }
  out.sup_residual = out.residual.values.middleCols(2, grid.size() - 4).cwiseAbs().rowwise().maxCoeff();
  out.boundary_start = (u.at(0) - prob.alpha1).cwiseAbs();
  out.boundary_end = (u.at(grid.size() - 1) - prob.alpha2).cwiseAbs();
  return out;
}

Table emit_figure_data(const Problem& prob, const ApproxSolution& approx) {
  if (prob.dim() != 1) throw UnsupportedError("figure data is produced for scalar problems only");
  const GridFunction& u = approx.last();
  const Grid& grid = u.grid;
  const Index iterates = static_cast<Index>(approx.iterates.size());

  Table table;
  table.header.push_back("t");
  for (Index k = 0; k < iterates; ++k) table.header.push_back("u_" + std::to_string(k));
  table.header.push_back("f");
  table.header.push_back("caputo");

  const SuccessiveApproximation map(prob);
  const GridFunction f = map.rhs_on_grid(u);
  const GridFunction caputo = caputo_derivative(u, prob.p, approx.chi1);

  table.rows.resize(grid.size(), iterates + 3);
  for (Index j = 0; j < grid.size(); ++j) {
    table.rows(j, 0) = grid.node(j);
    for (Index k = 0; k < iterates; ++k) table.rows(j, k + 1) = approx.iterates[k].values(0, j);
    table.rows(j, iterates + 1) = f.values(0, j);
    table.rows(j, iterates + 2) = caputo.values(0, j);
  }
  return table;
}

}  // namespace fracbvp
