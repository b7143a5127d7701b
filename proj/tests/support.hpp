#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "fracbvp/fracops.hpp"
#include "fracbvp/problem.hpp"
#include "fracbvp/verify.hpp"

namespace fracbvp::testing {

/// Plain description of a scalar problem, rendered to config text.
struct ScalarSpec {
  double p = 1.5;
  double T = 1.0;
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  double lo = -100.0;
  double hi = 100.0;
  std::string expr = "0";
  std::string constants;
  double omega_lo = -2.0;
  double omega_hi = 2.0;
  std::optional<double> M;
  std::optional<double> K;
  long N = 201;
  bool enforce_domain = false;
};

inline std::string config_text(const ScalarSpec& s) {
  std::ostringstream c;
  c << "[problem]\np = " << format_number(s.p) << "\nT = " << format_number(s.T)
    << "\nalpha1 = " << format_number(s.alpha1) << "\nalpha2 = " << format_number(s.alpha2) << "\nN = " << s.N
    << "\nenforce_domain = " << (s.enforce_domain ? "true" : "false") << "\n\n";
  c << "[domain]\nlo = " << format_number(s.lo) << "\nhi = " << format_number(s.hi) << "\n\n";
  c << "[rhs]\nexpr = " << s.expr << '\n';
  if (!s.constants.empty()) c << "constants = " << s.constants << '\n';
  c << "\n[omega_box]\nlo = " << format_number(s.omega_lo) << "\nhi = " << format_number(s.omega_hi) << "\n";
  if (s.M || s.K) {
    c << "\n[bounds]\n";
    if (s.M) c << "M = " << format_number(*s.M) << '\n';
    if (s.K) c << "K = " << format_number(*s.K) << '\n';
  }
  return c.str();
}

inline Problem make_problem(const ScalarSpec& s) { return parse_problem(config_text(s)); }

/// Scalar grid function with values fn(t_j).
inline GridFunction sample(const Grid& grid, auto&& fn) {
  MatrixXd v(1, grid.size());
  for (Index j = 0; j < grid.size(); ++j) v(0, j) = fn(grid.node(j));
  return {grid, v};
}

inline double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

/// f = a sin(b u + c t) + d cos(t), with the analytic bounds M = |a| + |d| and
/// K = |a b|, scaled so that r(Q) lies below `max_radius`.
inline Problem random_sine_problem(std::mt19937_64& rng, double max_radius = 0.45, long N = 201) {
  ScalarSpec s;
  s.p = uniform(rng, 1.1, 2.0);
  s.T = uniform(rng, 0.5, 2.0);
  s.alpha1 = uniform(rng, -1.0, 1.0);
  s.alpha2 = uniform(rng, -1.0, 1.0);
  s.N = N;
  const double a = uniform(rng, -2.0, 2.0);
  const double c = uniform(rng, -1.0, 1.0);
  const double d = uniform(rng, -1.0, 1.0);
  const double kc = kernel_constant(s.T, s.p);
  const double b_max = max_radius / (kc * std::abs(a));
  const double b = uniform(rng, -b_max, b_max);
  s.expr = format_number(a) + "*sin(" + format_number(b) + "*u1 + " + format_number(c) + "*t) + " +
           format_number(d) + "*cos(t)";
  s.M = std::abs(a) + std::abs(d);
  s.K = std::abs(a * b);
  return make_problem(s);
}

/// f == 0 with random order, horizon and boundary data; Omega contains the
/// root (alpha2 - alpha1) / T somewhere inside.
inline Problem random_zero_problem(std::mt19937_64& rng) {
  ScalarSpec s;
  s.p = uniform(rng, 1.05, 2.0);
  s.T = uniform(rng, 0.3, 3.0);
  s.alpha1 = uniform(rng, -5.0, 5.0);
  s.alpha2 = uniform(rng, -5.0, 5.0);
  const double root = (s.alpha2 - s.alpha1) / s.T;
  s.omega_lo = root - uniform(rng, 0.01, 10.0);
  s.omega_hi = root + uniform(rng, 0.01, 10.0);
  s.M = 0.0;
  s.K = 0.0;
  s.N = 101;
  return make_problem(s);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("fracbvp-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fracbvp::testing
