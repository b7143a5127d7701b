#include "fracbvp/determine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "fracbvp/conditions.hpp"
#include "fracbvp/errors.hpp"
#include "fracbvp/fracops.hpp"
#include "fracbvp/parallel.hpp"

namespace fracbvp {

namespace {

using Trace = std::vector<std::pair<VectorXd, VectorXd>>;

Trace as_pairs(const std::vector<Probe>& probes) {
  Trace out;
  out.reserve(probes.size());
  for (const Probe& p : probes) out.emplace_back(p.chi1, p.delta);
  return out;
}

class Evaluator {
 public:
  Evaluator(const Problem& prob, int m) : prob_(prob), m_(m) {}

  VectorXd operator()(const VectorXd& chi1) {
    VectorXd d = delta_m_at(prob_, chi1, m_);
    trace.push_back({chi1, d});
    return d;
  }

  /// Same as operator() but reports failures of the iteration as nullopt.
  std::optional<VectorXd> try_eval(const VectorXd& chi1) {
    try {
      return (*this)(chi1);
    } catch (const DomainEscapeError&) {
    } catch (const EvaluationError&) {
    }
    return std::nullopt;
  }

  std::vector<Probe> trace;

 private:
  const Problem& prob_;
  int m_;
};

DeterminingResult solve_scalar(const Problem& prob, int m, const SolverConfig& config) {
  Evaluator eval(prob, m);
  const double lo = prob.omega.lo[0];
  const double hi = prob.omega.hi[0];
  const int probes = std::max(2, config.bracket_probes);
  auto scalar = [&](double x) { return eval(VectorXd::Constant(1, x))[0]; };

  std::vector<double> xs(probes), fs(probes);
  for (int k = 0; k < probes; ++k) {
    xs[k] = k == probes - 1 ? hi : lo + (hi - lo) * k / (probes - 1);
    fs[k] = scalar(xs[k]);
  }

  DeterminingResult out;
  out.m = m;
  for (int k = 0; k < probes; ++k) {
    if (fs[k] == 0.0) {
      out.chi1_star = VectorXd::Constant(1, xs[k]);
      out.residual = VectorXd::Zero(1);
      out.solver_trace = std::move(eval.trace);
      return out;
    }
  }
  int bracket = -1;
  for (int k = 0; k + 1 < probes; ++k) {
    if (std::signbit(fs[k]) != std::signbit(fs[k + 1])) {
      bracket = k;
      break;
    }
  }
  if (bracket < 0)
    throw NoBracketError("Delta_" + std::to_string(m) + " keeps one sign on " + std::to_string(probes) +
                         " probes across Omega");

  const double x_tol = config.x_tolerance;
  auto tolerance = [x_tol](double a, double b) {
    return std::abs(b - a) <= x_tol * (1.0 + std::min(std::abs(a), std::abs(b)));
  };
  std::uintmax_t iterations = static_cast<std::uintmax_t>(config.max_iterations);
  std::pair<double, double> range;
  try {
    range = boost::math::tools::toms748_solve(scalar, xs[bracket], xs[bracket + 1], fs[bracket],
                                              fs[bracket + 1], tolerance, iterations);
  } catch (const std::exception& e) {
    throw NonConvergenceError(std::string("bracketing solver failed: ") + e.what(), as_pairs(eval.trace));
  }
  if (!tolerance(range.first, range.second))
    throw NonConvergenceError("bracketing solver hit the iteration limit", as_pairs(eval.trace));

  const Probe* best = nullptr;
  for (const Probe& p : eval.trace) {
    const double x = p.chi1[0];
    if (x != range.first && x != range.second) continue;
    if (!best || std::abs(p.delta[0]) < std::abs(best->delta[0])) best = &p;
  }
  if (best) {
    out.chi1_star = best->chi1;
    out.residual = best->delta;
  } else {
    out.chi1_star = VectorXd::Constant(1, 0.5 * (range.first + range.second));
    out.residual = eval(out.chi1_star);
  }
  out.iterations_used = static_cast<int>(iterations);
  out.solver_trace = std::move(eval.trace);
  return out;
}

VectorXd clamp_to(const Box& box, const VectorXd& x) { return x.cwiseMax(box.lo).cwiseMin(box.hi); }

struct NewtonOutcome {
  bool converged = false;
  VectorXd x;
  VectorXd fx;
  int iterations = 0;
};

NewtonOutcome damped_newton(Evaluator& eval, VectorXd x, const SolverConfig& config, double residual_goal) {
  NewtonOutcome out;
  const Index n = x.size();
  std::optional<VectorXd> fx = eval.try_eval(x);
  if (!fx) return out;
  for (int it = 0; it < config.max_iterations; ++it) {
    out.iterations = it;
    if (fx->cwiseAbs().maxCoeff() <= residual_goal) {
      out.converged = true;
      break;
    }
    MatrixXd J(n, n);
    bool jacobian_ok = true;
    for (Index j = 0; j < n && jacobian_ok; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(x[j]));
      VectorXd shifted = x;
      shifted[j] += h;
      const std::optional<VectorXd> fs = eval.try_eval(shifted);
      if (!fs) jacobian_ok = false;
      else J.col(j) = (*fs - *fx) / h;
    }
    if (!jacobian_ok) break;
    const auto lu = J.fullPivLu();
    if (!lu.isInvertible()) break;
    const VectorXd step = lu.solve(-*fx);

    bool accepted = false;
    for (double lambda = 1.0; lambda >= 1.0 / 1024.0; lambda *= 0.5) {
      const VectorXd y = x + lambda * step;
      const std::optional<VectorXd> fy = eval.try_eval(y);
      if (fy && fy->cwiseAbs().maxCoeff() < fx->cwiseAbs().maxCoeff()) {
        const bool small = (lambda * step).cwiseAbs().maxCoeff() <=
                           config.x_tolerance * (1.0 + x.cwiseAbs().maxCoeff());
        x = y;
        fx = fy;
        accepted = true;
        if (small) out.converged = true;
        break;
      }
    }
    if (!accepted || out.converged) break;
  }
  out.x = x;
  out.fx = *fx;
  out.converged = out.converged || fx->cwiseAbs().maxCoeff() <= residual_goal;
  return out;
}

// Shrinks a box around the smallest-residual lattice point of Omega.
VectorXd refine_on_grid(Evaluator& eval, const Box& omega, int rounds, int per_axis) {
  const Index n = omega.dim();
  Box box = omega;
  VectorXd best_x = omega.center();
  double best_f = std::numeric_limits<double>::infinity();
  for (int round = 0; round < rounds; ++round) {
    const VectorXd cell = (box.hi - box.lo) / (per_axis - 1);
    Index total = 1;
    for (Index i = 0; i < n; ++i) total *= per_axis;
    for (Index flat = 0; flat < total; ++flat) {
      VectorXd x(n);
      Index rest = flat;
      for (Index i = 0; i < n; ++i) {
        x[i] = box.lo[i] + cell[i] * static_cast<double>(rest % per_axis);
        rest /= per_axis;
      }
      const std::optional<VectorXd> fx = eval.try_eval(x);
      if (!fx) continue;
      const double size = fx->cwiseAbs().maxCoeff();
      if (size < best_f) {
        best_f = size;
        best_x = x;
      }
    }
    box = {clamp_to(omega, best_x - cell), clamp_to(omega, best_x + cell)};
  }
  return best_x;
}

DeterminingResult solve_system(const Problem& prob, int m, const SolverConfig& config) {
  Evaluator eval(prob, m);
  const Box& omega = prob.omega;
  const VectorXd start = omega.center();
  const std::optional<VectorXd> f0 = eval.try_eval(start);
  const double scale = f0 ? std::max(1.0, f0->cwiseAbs().maxCoeff()) : 1.0;
  const double goal = config.residual_tolerance * scale;

  NewtonOutcome outcome = damped_newton(eval, start, config, goal);
  if (!outcome.converged) {
    const VectorXd seed = refine_on_grid(eval, omega, 8, 5);
    outcome = damped_newton(eval, seed, config, goal);
  }
  if (!outcome.converged)
    throw NonConvergenceError("Newton iteration on Delta_" + std::to_string(m) + " did not converge",
                              as_pairs(eval.trace));
  const double slack = 1e-9 * (1.0 + (omega.hi - omega.lo).cwiseAbs().maxCoeff());
  if (!omega.contains(outcome.x, slack))
    throw NonConvergenceError("zero of Delta_" + std::to_string(m) + " lies outside Omega",
                              as_pairs(eval.trace));

  DeterminingResult out;
  out.m = m;
  out.chi1_star = outcome.x;
  out.residual = outcome.fx;
  out.iterations_used = outcome.iterations;
  out.solver_trace = std::move(eval.trace);
  return out;
}

}  // namespace

VectorXd delta_m(const Problem& prob, const ApproxSolution& approx) {
  const GridFunction& u = approx.last();
  const SuccessiveApproximation map(prob);
  const GridFunction g = map.rhs_on_grid(u);
  const VectorXd integral = frac_integral(g, prob.p, map.grid().size() - 1);
  const double factor = gamma(prob.p + 1.0) / std::pow(prob.T, prob.p);
  return factor * (prob.alpha2 - prob.alpha1 - approx.chi1 * prob.T) - factor * integral;
}

VectorXd delta_m_at(const Problem& prob, const VectorXd& chi1, int m) {
  return delta_m(prob, fixed_iterates(prob, chi1, m));
}

DeterminingResult solve_determining(const Problem& prob, int m, const SolverConfig& config) {
  prob.validate();
  if (m < 0) throw DomainError("iteration count must be >= 0");
  return prob.dim() == 1 ? solve_scalar(prob, m, config) : solve_system(prob, m, config);
}

std::vector<Box> ExclusionResult::survivors() const {
  std::vector<Box> out;
  for (const BoxVerdict& v : boxes)
    if (v.kept) out.push_back(v.box);
  return out;
}

Index ExclusionResult::kept_count() const {
  return std::count_if(boxes.begin(), boxes.end(), [](const BoxVerdict& v) { return v.kept; });
}

ExclusionResult exclusion_sweep(const Problem& prob, int m, int subdivisions) {
  if (subdivisions < 1) throw DomainError("subdivisions must be >= 1");
  if (m < 0) throw DomainError("iteration count must be >= 0");
  const ConditionsReport report = check_conditions(prob);

  ExclusionResult out;
  out.m = m;
  out.subdivisions = subdivisions;
  out.lipschitz = determining_lipschitz(report);
  out.tail = delta_gap_bound(report, prob.M, m);

  const Index n = prob.dim();
  Index total = 1;
  for (Index i = 0; i < n; ++i) total *= subdivisions;
  const VectorXd width = (prob.omega.hi - prob.omega.lo) / subdivisions;

  out.boxes.resize(static_cast<std::size_t>(total));
  for (Index flat = 0; flat < total; ++flat) {
    Box box{VectorXd(n), VectorXd(n)};
    Index rest = flat;
    for (Index i = 0; i < n; ++i) {
      const Index k = rest % subdivisions;
      rest /= subdivisions;
      box.lo[i] = prob.omega.lo[i] + width[i] * static_cast<double>(k);
      box.hi[i] = k + 1 == subdivisions ? prob.omega.hi[i] : box.lo[i] + width[i];
    }
    out.boxes[static_cast<std::size_t>(flat)].box = std::move(box);
  }

  parallel_for(out.boxes.size(), [&](std::size_t k) {
    BoxVerdict& v = out.boxes[k];
    v.representative = v.box.center();
    v.delta = delta_m_at(prob, v.representative, m);
    v.threshold = out.lipschitz * v.box.half_width() + out.tail;
    v.kept = (v.delta.cwiseAbs().array() <= v.threshold.array()).all();
  });
  return out;
}

ExistenceVerdict existence_check_scalar(const Problem& prob, int m) {
  if (prob.dim() != 1) throw UnsupportedError("the existence check is implemented for scalar problems only");
  if (m < 0) throw DomainError("iteration count must be >= 0");
  const ConditionsReport report = check_conditions(prob);

  ExistenceVerdict out;
  out.tube = delta_gap_bound(report, prob.M, m)[0];
  out.delta_lo = delta_m_at(prob, prob.omega.lo, m)[0];
  out.delta_hi = delta_m_at(prob, prob.omega.hi, m)[0];
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
  out.degree = (sign(out.delta_hi) - sign(out.delta_lo)) / 2;
  out.certified = std::abs(out.delta_lo) > out.tube && std::abs(out.delta_hi) > out.tube && out.degree != 0;
  return out;
}

}  // namespace fracbvp
