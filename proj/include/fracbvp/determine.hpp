#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fracbvp/iterate.hpp"
#include "fracbvp/problem.hpp"

namespace fracbvp {

/// Delta_m(chi1) = (alpha2 - alpha1 - chi1 T) Gamma(p+1) / T^p
///                 - Gamma(p+1) / T^p I^p[f(u_m)](T).
/// A zero of the limit Delta is a chi1 whose limit function solves the
/// boundary value problem.
VectorXd delta_m(const Problem& prob, const ApproxSolution& approx);

/// Runs m iterations at chi1 and evaluates Delta_m there.
VectorXd delta_m_at(const Problem& prob, const VectorXd& chi1, int m);

struct Probe {
  VectorXd chi1;
  VectorXd delta;
};

struct SolverConfig {
  /// Equally spaced sign probes across Omega (scalar case).
  int bracket_probes = 16;
  int max_iterations = 100;
  /// Bracket width (scalar) or Newton step (system) relative to 1 + |chi1|.
  double x_tolerance = 1e-12;
  /// Newton stops once max |Delta_m| is below this.
  double residual_tolerance = 1e-10;
};

struct DeterminingResult {
  int m = 0;
  VectorXd chi1_star;
  VectorXd residual;
  int iterations_used = 0;
  std::vector<Probe> solver_trace;
};

/// Zero of Delta_m in Omega. Scalar problems bracket by sign probes and
/// refine with TOMS 748; systems use damped Newton with a finite-difference
/// Jacobian, falling back to grid refinement of Omega when Newton stalls.
/// Throws NoBracketError when no sign change is found (scalar) and
/// NonConvergenceError, carrying the probe trace, when the solver fails.
DeterminingResult solve_determining(const Problem& prob, int m, const SolverConfig& config = {});

struct BoxVerdict {
  Box box;
  VectorXd representative;
  VectorXd delta;
  VectorXd threshold;
  bool kept = false;
};

struct ExclusionResult {
  int m = 0;
  int subdivisions = 0;
  /// C such that |Delta_m(a) - Delta_m(b)| <= C |a - b| up to the tail.
  MatrixXd lipschitz;
  /// Q^m (I - Q)^-1 M.
  VectorXd tail;
  std::vector<BoxVerdict> boxes;

  std::vector<Box> survivors() const;
  Index kept_count() const;
};

/// Splits Omega into subdivisions^n congruent boxes and keeps a box iff
/// |Delta_m(center)| <= C half_width + Q^m (I - Q)^-1 M componentwise.
/// A discarded box provably holds no zero of the limit Delta. Boxes are
/// listed with axis 0 varying fastest. Requires r(Q) < 1.
ExclusionResult exclusion_sweep(const Problem& prob, int m, int subdivisions);

struct ExistenceVerdict {
  bool certified = false;
  double delta_lo = 0.0;
  double delta_hi = 0.0;
  /// Q^m (I - Q)^-1 M, the band around Delta_m that contains Delta.
  double tube = 0.0;
  /// Brouwer degree of Delta_m on Omega with respect to 0; meaningful when
  /// neither endpoint value lies inside the tube.
  int degree = 0;
};

/// Scalar existence test: when Delta_m clears the tube at both ends of
/// Omega and changes sign, Delta has a zero in Omega. Throws
/// UnsupportedError for systems.
ExistenceVerdict existence_check_scalar(const Problem& prob, int m);

}  // namespace fracbvp
