#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fracbvp/fracops.hpp"
#include "fracbvp/grid.hpp"
#include "fracbvp/problem.hpp"

namespace fracbvp {

/// Result of running the successive approximations for one chi1.
struct ApproxSolution {
  VectorXd chi1;
  /// u_0, u_1, ..., u_m.
  std::vector<GridFunction> iterates;
  /// Entry k - 1 is max_t |u_k - u_{k-1}|, k = 1..m.
  std::vector<VectorXd> sup_diffs;
  /// Entry k - 1 is the a-priori bound kernel_constant Q^(k-1) M on that
  /// same difference.
  std::vector<VectorXd> bounds_used;
  bool converged = false;
  int m = 0;
  /// Nodes (summed over components and iterates) at which an iterate fed to
  /// the right-hand side lay outside D.
  Index domain_escapes = 0;

  const GridFunction& last() const { return iterates.back(); }
};

/// u_0(t) = alpha1 + chi1 t - (t/T)^p (alpha1 + chi1 T - alpha2).
GridFunction initial_iterate(const Problem& prob, const VectorXd& chi1);

/// Applies the successive-approximation map once on a fixed grid. The
/// integrator and the (t/T)^p weights are built once and reused.
class SuccessiveApproximation {
 public:
  explicit SuccessiveApproximation(const Problem& prob);

  const Grid& grid() const { return grid_; }
  GridFunction initial(const VectorXd& chi1) const;

  /// u_{m+1} = u_0 + I^p f(u_m) - (t/T)^p I^p f(u_m)(T), with both boundary
  /// values pinned exactly. Escapes from D beyond a 1e-9 relative slack throw
  /// DomainEscapeError when the problem enforces the domain; otherwise every
  /// node outside D is added to `escapes`.
  GridFunction step(const GridFunction& prev, const VectorXd& chi1, Index* escapes = nullptr) const;

  /// f evaluated at every node of u.
  GridFunction rhs_on_grid(const GridFunction& u) const;

 private:
  const Problem& prob_;
  Grid grid_;
  FractionalIntegrator integral_;
  VectorXd ramp_;  // (t_j / T)^p
};

GridFunction iterate_step(const Problem& prob, const GridFunction& prev, const VectorXd& chi1);

struct IterationOptions {
  /// Proceed even when r(Q) >= 1.
  bool force = false;
};

/// Default stopping tolerance 1e-8 (1 + |alpha2 - alpha1|), componentwise.
VectorXd default_tolerance(const Problem& prob);

/// Iterates until max_t |u_m - u_{m-1}| <= tol in every component or
/// m == m_max. Throws BoundUndefinedError when r(Q) >= 1 unless forced.
ApproxSolution run_iteration(const Problem& prob, const VectorXd& chi1, int m_max, const VectorXd& tol,
                             const IterationOptions& options = {});

/// Exactly m steps, without the contraction precondition. `converged`
/// reports whether the last difference is within default_tolerance.
ApproxSolution fixed_iterates(const Problem& prob, const VectorXd& chi1, int m,
                              const IterationOptions& options = {});

}  // namespace fracbvp
