#include "fracbvp/iterate.hpp"

#include <cmath>
#include <string>

#include "fracbvp/conditions.hpp"
#include "fracbvp/errors.hpp"

namespace fracbvp {

namespace {

void require_chi(const Problem& prob, const VectorXd& chi1) {
  if (chi1.size() != prob.dim()) throw SizeError("chi1 has the wrong number of components");
  if (!chi1.allFinite()) throw DomainError("chi1 must be finite");
}

}  // namespace

SuccessiveApproximation::SuccessiveApproximation(const Problem& prob)
    : prob_(prob), grid_(prob.grid()), integral_(grid_, prob.p), ramp_(grid_.size()) {
  for (Index j = 0; j < grid_.size(); ++j) ramp_[j] = std::pow(grid_.node(j) / prob.T, prob.p);
  ramp_[0] = 0.0;
  ramp_[grid_.size() - 1] = 1.0;
}

GridFunction SuccessiveApproximation::initial(const VectorXd& chi1) const {
  require_chi(prob_, chi1);
  const VectorXd gap = prob_.alpha1 + chi1 * prob_.T - prob_.alpha2;
  MatrixXd values(prob_.dim(), grid_.size());
  for (Index j = 0; j < grid_.size(); ++j)
    values.col(j) = prob_.alpha1 + chi1 * grid_.node(j) - ramp_[j] * gap;
  values.col(0) = prob_.alpha1;
  values.col(grid_.size() - 1) = prob_.alpha2;
  return {grid_, std::move(values)};
}

GridFunction SuccessiveApproximation::rhs_on_grid(const GridFunction& u) const {
  MatrixXd values(prob_.dim(), grid_.size());
  for (Index j = 0; j < grid_.size(); ++j) values.col(j) = prob_.rhs(grid_.node(j), u.at(j));
  return {grid_, std::move(values)};
}

GridFunction SuccessiveApproximation::step(const GridFunction& prev, const VectorXd& chi1, Index* escapes) const {
  if (!(prev.grid == grid_) || prev.components() != prob_.dim())
    throw SizeError("iterate does not match the problem grid");
  const Box& D = prob_.domain;
  for (Index j = 0; j < grid_.size(); ++j) {
    for (Index i = 0; i < prob_.dim(); ++i) {
      const double v = prev.values(i, j);
      if (v >= D.lo[i] && v <= D.hi[i]) continue;
      const double excess = v < D.lo[i] ? D.lo[i] - v : v - D.hi[i];
      if (prob_.enforce_domain && excess > 1e-9 * (1.0 + std::abs(D.hi[i] - D.lo[i])))
        throw DomainEscapeError("iterate left D at t = " + std::to_string(grid_.node(j)) + ", component " +
                                    std::to_string(i) + ", value " + std::to_string(v),
                                grid_.node(j), static_cast<int>(i), v);
      if (escapes) ++*escapes;
    }
  }

  GridFunction next = initial(chi1);
  next.values += boundary_corrected_integral(integral_, rhs_on_grid(prev)).values;
  next.values.col(0) = prob_.alpha1;
  next.values.col(grid_.size() - 1) = prob_.alpha2;
  return next;
}

GridFunction initial_iterate(const Problem& prob, const VectorXd& chi1) {
  return SuccessiveApproximation(prob).initial(chi1);
}

GridFunction iterate_step(const Problem& prob, const GridFunction& prev, const VectorXd& chi1) {
  return SuccessiveApproximation(prob).step(prev, chi1);
}

VectorXd default_tolerance(const Problem& prob) {
  const double scale = (prob.alpha2 - prob.alpha1).cwiseAbs().maxCoeff();
  return VectorXd::Constant(prob.dim(), 1e-8 * (1.0 + scale));
}

namespace {

ApproxSolution iterate(const Problem& prob, const VectorXd& chi1, int m_max, const VectorXd* tol) {
  const ConditionsReport report = check_conditions(prob);
  const SuccessiveApproximation map(prob);

  ApproxSolution out;
  out.chi1 = chi1;
  out.iterates.push_back(map.initial(chi1));
  VectorXd bound = report.kernel_constant * prob.M;
  for (int k = 1; k <= m_max; ++k) {
    out.iterates.push_back(map.step(out.iterates.back(), chi1, &out.domain_escapes));
    out.sup_diffs.push_back(sup_diff(out.iterates[k], out.iterates[k - 1]));
    out.bounds_used.push_back(bound);
    bound = report.Q * bound;
    out.m = k;
    if (tol && (out.sup_diffs.back().array() <= tol->array()).all()) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

ApproxSolution run_iteration(const Problem& prob, const VectorXd& chi1, int m_max, const VectorXd& tol,
                             const IterationOptions& options) {
  require_chi(prob, chi1);
  if (m_max < 1) throw DomainError("m_max must be >= 1");
  if (tol.size() != prob.dim() || (tol.array() <= 0.0).any())
    throw DomainError("tolerance must be positive in every component");
  if (!options.force) {
    const ConditionsReport report = check_conditions(prob);
    if (!report.contraction())
      throw BoundUndefinedError("spectral radius r(Q) = " + std::to_string(report.spectral_radius) +
                                " >= 1: the iteration is not a contraction");
  }
  return iterate(prob, chi1, m_max, &tol);
}

ApproxSolution fixed_iterates(const Problem& prob, const VectorXd& chi1, int m, const IterationOptions&) {
  require_chi(prob, chi1);
  if (m < 0) throw DomainError("iteration count must be >= 0");
  ApproxSolution out = iterate(prob, chi1, m, nullptr);
  if (m > 0) out.converged = (out.sup_diffs.back().array() <= default_tolerance(prob).array()).all();
  return out;
}

}  // namespace fracbvp
