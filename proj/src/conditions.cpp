#include "fracbvp/conditions.hpp"

#include <cmath>

#include "fracbvp/errors.hpp"
#include "fracbvp/fracops.hpp"

namespace fracbvp {

namespace {

constexpr int kAprioriLength = 25;

MatrixXd matrix_power(const MatrixXd& Q, int m) {
  MatrixXd out = MatrixXd::Identity(Q.rows(), Q.cols());
  for (int k = 0; k < m; ++k) out = out * Q;
  return out;
}

void require_contraction(const ConditionsReport& report) {
  if (!report.contraction())
    throw BoundUndefinedError("spectral radius r(Q) = " + std::to_string(report.spectral_radius) +
                              " >= 1: error bounds are undefined");
}

MatrixXd resolvent(const MatrixXd& Q) {
  const Index n = Q.rows();
  return (MatrixXd::Identity(n, n) - Q).partialPivLu().solve(MatrixXd::Identity(n, n));
}

// Power iteration in the max-norm; NaN when the
// estimate did not settle within `iterations`.
double power_iteration(const MatrixXd& A, int iterations) {
  VectorXd x = VectorXd::Ones(A.rows());
  double previous = -1.0;
  for (int k = 0; k < iterations; ++k) {
    const VectorXd y = A * x;
    const double lambda = y.cwiseAbs().maxCoeff();
    if (lambda == 0.0) return 0.0;
    x = y / lambda;
    if (std::abs(lambda - previous) <= 1e-12 * std::max(1.0, lambda)) return lambda;
    previous = lambda;
  }
  return std::nan("");
}

}  // namespace

double spectral_radius(const MatrixXd& Q) {
  if (Q.rows() != Q.cols()) throw SizeError("spectral_radius: matrix must be square");
  if ((Q.array() < 0.0).any()) throw DomainError("spectral_radius: matrix must be non-negative");
  if (Q.isZero(0.0)) return 0.0;
  const double direct = power_iteration(Q, 200);
  if (!std::isnan(direct)) return direct;
  // Cycling (e.g. an imprimitive Q): Q + I is primitive with Perron root r + 1.
  const MatrixXd shifted = Q + MatrixXd::Identity(Q.rows(), Q.cols());
  const double r = power_iteration(shifted, 100000);
  if (std::isnan(r)) throw NonConvergenceError("spectral_radius: power iteration did not settle", {});
  return std::max(0.0, r - 1.0);
}

double boundary_correction_sup(double T, double p) {
  if (!(p > 1.0 && p <= 2.0)) throw DomainError("boundary_correction_sup: p outside (1,2]");
  if (!(T > 0.0)) throw DomainError("boundary_correction_sup: T must be > 0");
  const double tau = std::pow(p, -1.0 / (p - 1.0));
  return T * (tau - std::pow(tau, p));
}

double boundary_correction_sup_dense(double T, double p, Index nodes) {
  const Grid grid(T, nodes);
  double best = 0.0;
  for (Index j = 0; j < nodes; ++j) {
    const double t = grid.node(j);
    best = std::max(best, std::abs(t - T * std::pow(t / T, p)));
  }
  return best;
}

ConditionsReport check_conditions(const Problem& prob) {
  prob.validate();
  ConditionsReport r;
  const Index n = prob.dim();
  r.p = prob.p;
  r.T = prob.T;
  r.kernel_constant = kernel_constant(prob.T, prob.p);
  r.M = prob.M;
  r.K = prob.K;
  r.beta = r.kernel_constant * prob.M;
  r.beta_over_M = VectorXd::Constant(n, r.kernel_constant);
  r.Q = r.kernel_constant * prob.K;
  r.spectral_radius = spectral_radius(r.Q);
  r.R = boundary_correction_sup(prob.T, prob.p);

  r.dbeta_basis = prob.beta_basis;
  r.beta_used = prob.beta_basis == BetaBasis::Raw ? r.beta : r.beta_over_M;
  const VectorXd width = prob.domain.hi - prob.domain.lo;
  r.dbeta_ok = (width.array() >= 2.0 * r.beta_used.array()).all();
  r.alpha1_in_dbeta = ((prob.alpha1 - r.beta_used).array() >= prob.domain.lo.array()).all() &&
                      ((prob.alpha1 + r.beta_used).array() <= prob.domain.hi.array()).all();

  if (r.contraction()) {
    const double floor = 1e-12 * prob.M.cwiseAbs().maxCoeff();
    for (int m = 0; m < kAprioriLength; ++m) {
      r.apriori_bounds.push_back(apriori_error(r, prob.M, m));
      if (r.apriori_bounds.back().maxCoeff() <= floor) break;
    }
  }
  return r;
}

VectorXd delta_gap_bound(const ConditionsReport& report, const VectorXd& M, int m) {
  require_contraction(report);
  if (m < 0) throw DomainError("iteration index must be >= 0");
  if (M.size() != report.Q.rows()) throw SizeError("M has the wrong number of components");
  const Index n = report.Q.rows();
  const VectorXd solved = (MatrixXd::Identity(n, n) - report.Q).partialPivLu().solve(M);
  return matrix_power(report.Q, m) * solved;
}

VectorXd apriori_error(const ConditionsReport& report, const VectorXd& M, int m) {
  return report.kernel_constant * delta_gap_bound(report, M, m);
}

MatrixXd LipschitzConstants::chi_sensitivity(double t) const {
  const Index n = resolvent.rows();
  return R * MatrixXd::Identity(n, n) + alpha1(t, 0.0, T, p) * R * resolvent;
}

LipschitzConstants lipschitz_constants(const ConditionsReport& report, const Problem& prob) {
  require_contraction(report);
  LipschitzConstants out;
  out.R = boundary_correction_sup(prob.T, prob.p);
  out.T = prob.T;
  out.p = prob.p;
  out.resolvent = resolvent(report.Q);
  return out;
}

MatrixXd determining_lipschitz(const ConditionsReport& report) {
  require_contraction(report);
  const Index n = report.Q.rows();
  return gamma(report.p + 1.0) / std::pow(report.T, report.p - 1.0) * MatrixXd::Identity(n, n) +
         report.R * report.K + report.R * report.Q * resolvent(report.Q);
}

ErrorEnvelope::ErrorEnvelope(const ConditionsReport& report, const VectorXd& M, int m, const VectorXd& chi_gap)
    : T_(report.T), p_(report.p), R_(report.R) {
  require_contraction(report);
  if (chi_gap.size() != report.Q.rows()) throw SizeError("chi_gap has the wrong number of components");
  if ((chi_gap.array() < 0.0).any()) throw DomainError("chi_gap entries must be >= 0");
  tail_ = delta_gap_bound(report, M, m);
  drift_ = R_ * chi_gap + matrix_power(report.Q, m) * chi_gap;
  resolvent_ = R_ * resolvent(report.Q) * chi_gap;
}

VectorXd ErrorEnvelope::operator()(double t) const {
  const double a = alpha1(t, 0.0, T_, p_);
  return a * tail_ + drift_ + a * resolvent_;
}

GridFunction ErrorEnvelope::on_grid(const Grid& grid) const {
  MatrixXd values(tail_.size(), grid.size());
  for (Index j = 0; j < grid.size(); ++j) values.col(j) = (*this)(grid.node(j));
  return {grid, std::move(values)};
}

ErrorEnvelope combined_error_bound(const ConditionsReport& report, const VectorXd& M, int m,
                                   const VectorXd& chi_gap) {
  return {report, M, m, chi_gap};
}

}  // namespace fracbvp
