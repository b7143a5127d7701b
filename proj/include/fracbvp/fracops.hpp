#pragma once

// Fractional-calculus primitives on uniform grids: Gamma, product-integration
// of weakly singular kernels, the Riemann-Liouville integral, a numerical
// Caputo derivative and the kernel-estimate envelope alpha_1.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "fracbvp/errors.hpp"
#include "fracbvp/grid.hpp"

namespace fracbvp {

template <typename Scalar>
Scalar gamma(Scalar x) {
  using std::isfinite;
  if (!isfinite(x) || !(x > Scalar(0)))
    throw DomainError("gamma: argument must be finite and > 0");
  return std::tgamma(x);
}

/// Envelope 2 (t-a)^p / Gamma(p+1) * ((b-t)/(b-a))^p; vanishes at both ends,
/// peaks at the midpoint with value (b-a)^p / (2^(2p-1) Gamma(p+1)).
template <typename Scalar>
Scalar alpha1(Scalar t, Scalar a, Scalar b, Scalar p) {
  using std::pow;
  if (!(a < b)) throw DomainError("alpha1: need a < b");
  if (t < a || t > b) throw DomainError("alpha1: t outside [a, b]");
  return Scalar(2) * pow(t - a, p) / gamma(p + Scalar(1)) * pow((b - t) / (b - a), p);
}

/// Peak of alpha1 over [0, T]: T^p / (2^(2p-1) Gamma(p+1)).
template <typename Scalar>
Scalar kernel_constant(Scalar T, Scalar p) {
  using std::pow;
  return pow(T, p) / (pow(Scalar(2), Scalar(2) * p - Scalar(1)) * gamma(p + Scalar(1)));
}

namespace detail {

// (1+x)^a + (1-x)^a - 2 for 0 <= x <= 1/4, by the even binomial series.
template <typename Scalar>
Scalar even_binomial_remainder(Scalar a, Scalar x) {
  Scalar coeff = Scalar(1);  // C(a, k)
  Scalar power = Scalar(1);
  Scalar sum = Scalar(0);
  for (int k = 1; k < 200; ++k) {
    coeff *= (a - Scalar(k - 1)) / Scalar(k);
    power *= x;
    if (k % 2 == 0) {
      const Scalar term = Scalar(2) * coeff * power;
      sum += term;
      if (std::abs(term) <= std::numeric_limits<Scalar>::epsilon() * std::abs(sum) * Scalar(0.01))
        break;
    }
  }
  return sum;
}

// (1-x)^a - 1 + a x for 0 <= x <= 1/4.
template <typename Scalar>
Scalar tail_binomial_remainder(Scalar a, Scalar x) {
  Scalar coeff = a;  // C(a, 1)
  Scalar power = -x;
  Scalar sum = Scalar(0);
  for (int k = 2; k < 200; ++k) {
    coeff *= (a - Scalar(k - 1)) / Scalar(k);
    power *= -x;
    const Scalar term = coeff * power;
    sum += term;
    if (std::abs(term) <= std::numeric_limits<Scalar>::epsilon() * std::abs(sum) * Scalar(0.01))
      break;
  }
  return sum;
}

}  // namespace detail

/// Product-trapezoid coefficient for lag d >= 1 (interior node at distance d
/// from the evaluation node): (d+1)^(q+1) + (d-1)^(q+1) - 2 d^(q+1).
template <typename Scalar>
Scalar product_trapezoid_interior(Index d, Scalar q) {
  using std::pow;
  const Scalar a = q + Scalar(1);
  const Scalar dd = static_cast<Scalar>(d);
  if (d >= 4) return pow(dd, a) * detail::even_binomial_remainder(a, Scalar(1) / dd);
  return pow(dd + Scalar(1), a) + pow(dd - Scalar(1), a) - Scalar(2) * pow(dd, a);
}

/// Product-trapezoid coefficient of the first node, evaluation at node j >= 1:
/// (j-1)^(q+1) - (j-1-q) j^q.
template <typename Scalar>
Scalar product_trapezoid_start(Index j, Scalar q) {
  using std::pow;
  const Scalar a = q + Scalar(1);
  const Scalar jj = static_cast<Scalar>(j);
  if (j >= 4) return pow(jj, a) * detail::tail_binomial_remainder(a, Scalar(1) / jj);
  return pow(jj - Scalar(1), a) - (jj - Scalar(1) - q) * pow(jj, q);
}

/// Weights w_0..w_j with (1/Gamma(q)) int_0^{t_j} (t_j-s)^(q-1) g(s) ds
/// = sum_k w_k g(t_k), exact for g piecewise linear on the grid.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> product_trapezoid_weights(Index j, Scalar step, Scalar q) {
  using std::pow;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(j + 1);
  if (j == 0) return w;
  const Scalar scale = pow(step, q) / gamma(q + Scalar(2));
  w[0] = product_trapezoid_start(j, q);
  for (Index k = 1; k < j; ++k) w[k] = product_trapezoid_interior(j - k, q);
  w[j] = Scalar(1);
  return scale * w;
}

/// Riemann-Liouville integral I^q of grid functions on a fixed grid, using
/// the product-trapezoid rule. The lag coefficients are Toeplitz, so only
/// O(N) of them are stored; applying costs O(N^2) per component.
class FractionalIntegrator {
 public:
  FractionalIntegrator(const Grid& grid, double order);

  const Grid& grid() const { return grid_; }
  double order() const { return order_; }

  /// I^q g at node j.
  VectorXd at(const GridFunction& g, Index j) const;
  /// I^q g at every node.
  GridFunction apply(const GridFunction& g) const;
  /// Weight row for node j (length j + 1).
  VectorXd weights(Index j) const;

 private:
  Grid grid_;
  double order_;
  double scale_;
  VectorXd start_;     // by evaluation node j
  VectorXd interior_;  // by lag d
};

/// (1/Gamma(p)) int_0^{t_j} (t_j - s)^(p-1) g(s) ds for p in (1, 2].
VectorXd frac_integral(const GridFunction& g, double p, Index t_index);

/// I^p g(t) - (t/T)^p I^p g(T) at every node: the boundary-corrected integral
/// term of the successive-approximation formula.
GridFunction boundary_corrected_integral(const FractionalIntegrator& integral, const GridFunction& g);

/// Caputo derivative of order p in (1, 2] by the L1 scheme. `initial_slope`
/// is u'(0); if absent it is estimated by a second-order one-sided
/// difference. The value at node 0 is linearly extrapolated from nodes 1, 2.
GridFunction caputo_derivative(const GridFunction& u, double p,
                               const std::optional<VectorXd>& initial_slope = std::nullopt);

/// One application of the kernel-estimate operator
///   A[g](t) = (1/Gamma(p)) [ int_0^t ((t-s)^(p-1) - (t/T)^p (T-s)^(p-1)) g ds
///                          + (t/T)^p int_t^T (T-s)^(p-1) g ds ]
/// to a scalar function sampled on the grid. A[1] equals alpha1.
VectorXd kernel_estimate_operator(const Grid& grid, double p, const VectorXd& g);

/// alpha1 sampled on the grid nodes over [0, T].
VectorXd alpha1_on_grid(const Grid& grid, double p);

}  // namespace fracbvp
