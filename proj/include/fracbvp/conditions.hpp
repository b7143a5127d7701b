#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fracbvp/grid.hpp"
#include "fracbvp/problem.hpp"

namespace fracbvp {

/// Hypotheses of the successive-approximation scheme and the derived
/// constants every error bound is built from.
struct ConditionsReport {
  double p = 0.0;
  double T = 0.0;
  /// T^p / (2^(2p-1) Gamma(p+1)) = max_t alpha1(t) = beta / M.
  double kernel_constant = 0.0;
  VectorXd M;
  MatrixXd K;
  /// kernel_constant * M.
  VectorXd beta;
  /// beta / M, componentwise (equal to kernel_constant in every entry).
  VectorXd beta_over_M;
  /// The beta the D_beta verdict used, and which basis it came from.
  BetaBasis dbeta_basis = BetaBasis::Raw;
  VectorXd beta_used;
  /// kernel_constant * K.
  MatrixXd Q;
  double spectral_radius = 0.0;
  /// D_beta = { x in D : |u - x| <= beta implies u in D } is non-empty.
  bool dbeta_ok = false;
  /// alpha1 itself lies in D_beta.
  bool alpha1_in_dbeta = false;
  /// sup_t |t - T (t/T)^p|.
  double R = 0.0;
  /// kernel_constant * Q^m (I - Q)^-1 M for m = 0, 1, ...; empty if r(Q) >= 1.
  std::vector<VectorXd> apriori_bounds;

  bool contraction() const { return spectral_radius < 1.0; }
  bool all_hold() const { return contraction() && dbeta_ok; }
};

ConditionsReport check_conditions(const Problem& prob);

/// Spectral radius of a non-negative square matrix by power iteration
/// (200 steps or 1e-12 stagnation), restarted on Q + I when the plain
/// iteration cycles.
double spectral_radius(const MatrixXd& Q);

/// Bound on |u_inf - u_m|: kernel_constant * Q^m (I - Q)^-1 M.
VectorXd apriori_error(const ConditionsReport& report, const VectorXd& M, int m);

/// Bound on |Delta - Delta_m|: Q^m (I - Q)^-1 M.
VectorXd delta_gap_bound(const ConditionsReport& report, const VectorXd& M, int m);

/// sup_{t in [0,T]} |t - T (t/T)^p|, attained at t = T p^(-1/(p-1)).
double boundary_correction_sup(double T, double p);
/// Same supremum by maximizing over `nodes` equally spaced points.
double boundary_correction_sup_dense(double T, double p, Index nodes);

/// Lipschitz data of the limit function with respect to chi1.
struct LipschitzConstants {
  double R = 0.0;
  double T = 0.0;
  double p = 0.0;
  /// (I - Q)^-1
  MatrixXd resolvent;

  /// R I + alpha1(t) R (I - Q)^-1: |u(t, a) - u(t, b)| <= this * |a - b|.
  MatrixXd chi_sensitivity(double t) const;
};

LipschitzConstants lipschitz_constants(const ConditionsReport& report, const Problem& prob);

/// Lipschitz matrix of the determining function:
/// Gamma(p+1)/T^(p-1) I + R K + R Q (I - Q)^-1.
MatrixXd determining_lipschitz(const ConditionsReport& report);

/// Pointwise bound on |u_inf(t, chi*) - u_m(t, chi~)| given |chi* - chi~| <= chi_gap:
///   Q^m (I-Q)^-1 M alpha1(t) + (R I + R alpha1(t) (I-Q)^-1 + Q^m) chi_gap.
class ErrorEnvelope {
 public:
  ErrorEnvelope(const ConditionsReport& report, const VectorXd& M, int m, const VectorXd& chi_gap);

  VectorXd operator()(double t) const;
  GridFunction on_grid(const Grid& grid) const;

 private:
  double T_;
  double p_;
  double R_;
  VectorXd tail_;       // Q^m (I-Q)^-1 M
  VectorXd drift_;      // (R I + Q^m) chi_gap
  VectorXd resolvent_;  // R (I-Q)^-1 chi_gap
};

ErrorEnvelope combined_error_bound(const ConditionsReport& report, const VectorXd& M, int m,
                                   const VectorXd& chi_gap);

}  // namespace fracbvp
