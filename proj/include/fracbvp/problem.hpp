#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fracbvp/expr.hpp"
#include "fracbvp/grid.hpp"

namespace fracbvp {

/// Axis-aligned box [lo, hi] in R^n.
struct Box {
  VectorXd lo;
  VectorXd hi;

  Index dim() const { return lo.size(); }
  VectorXd center() const { return 0.5 * (lo + hi); }
  VectorXd half_width() const { return 0.5 * (hi - lo); }
  bool contains(const VectorXd& x, double slack = 0.0) const {
    return (x.array() >= lo.array() - slack).all() && (x.array() <= hi.array() + slack).all();
  }
};

/// Which beta the D_beta (domain-margin) verdict is computed from: the raw
/// M T^p / (2^(2p-1) Gamma(p+1)), or the M-free kernel constant
/// T^p / (2^(2p-1) Gamma(p+1)).
enum class BetaBasis { Raw, Normalized };

/// Two-point boundary value problem
///   cD^p u = f(t, u),  u(0) = alpha1,  u(T) = alpha2,  u(t) in D,
/// with the data needed by the successive-approximation scheme.
struct Problem {
  double p = 1.5;
  double T = 1.0;
  VectorXd alpha1;
  VectorXd alpha2;
  Box domain;
  std::string rhs_source;
  expr::Constants constants;
  std::vector<expr::Expr> f;
  /// Componentwise bound |f| <= M on [0,T] x D.
  VectorXd M;
  /// Lipschitz matrix |f(t,u) - f(t,v)| <= K |u - v|, entries >= 0.
  MatrixXd K;
  bool bounds_estimated = false;
  /// Parameter box for chi1 = u'(0).
  Box omega;
  Index N = 401;
  BetaBasis beta_basis = BetaBasis::Raw;
  /// When false, iterates leaving D are counted rather than rejected.
  bool enforce_domain = true;

  Index dim() const { return alpha1.size(); }
  Grid grid() const { return {T, N}; }
  VectorXd rhs(double t, const VectorXd& u) const { return expr::eval(f, t, u); }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

struct ParameterPoint {
  VectorXd chi1;
  bool in_omega = false;
};

ParameterPoint make_parameter_point(const Problem& prob, const VectorXd& chi1);

struct BoundSampling {
  /// Lattice points per axis of [0,T] x D when n <= 2.
  int per_axis = 200;
  /// Latin-hypercube sample count when n > 2.
  int lhs_points = 100000;
  std::uint64_t seed = 0;
  double inflation = 1.01;
};

struct BoundEstimate {
  /// Inflated bounds, ready to use in the scheme.
  VectorXd M;
  MatrixXd K;
  /// Raw maxima over the samples.
  VectorXd sampled_sup;
  MatrixXd sampled_lipschitz;
  Index samples = 0;
};

/// Estimates M = max |f| and K = max |df_i/du_j| over a sample of
/// [0,T] x D, each inflated by `sampling.inflation`. Jacobian entries use
/// central differences, one-sided at the faces of D.
BoundEstimate estimate_bounds(const Problem& prob, const BoundSampling& sampling = {});

struct LoadOptions {
  std::optional<Index> grid_n;
  BoundSampling sampling;
};

/// Parses the sectioned key-value config format (see docs/config.md).
Problem parse_problem(std::string_view text, const LoadOptions& options = {});
Problem load_problem(const std::filesystem::path& path, const LoadOptions& options = {});

std::vector<std::string> builtin_names();
/// Config text of a built-in problem; throws ConfigError for unknown names.
std::string builtin_config(std::string_view name);
Problem load_builtin(std::string_view name, const LoadOptions& options = {});

}  // namespace fracbvp
