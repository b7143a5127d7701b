#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fracbvp/errors.hpp"
#include "fracbvp/fracops.hpp"
#include "support.hpp"

using namespace fracbvp;
using fracbvp::testing::sample;

namespace {

const double kSqrtPi = std::sqrt(std::numbers::pi);

}  // namespace

TEST_CASE("gamma matches known values") {
  CHECK(fracbvp::gamma(0.5) == doctest::Approx(kSqrtPi).epsilon(1e-14));
  CHECK(fracbvp::gamma(2.5) == doctest::Approx(1.3293403881791355).epsilon(1e-14));
  CHECK(fracbvp::gamma(5.0) == doctest::Approx(24.0).epsilon(1e-14));
  CHECK(fracbvp::gamma(3.5L) == doctest::Approx(3.3233509704478426).epsilon(1e-14));
  CHECK_THROWS_AS(fracbvp::gamma(0.0), DomainError);
  CHECK_THROWS_AS(fracbvp::gamma(-1.5), DomainError);
}

TEST_CASE("alpha1 endpoints and midpoint") {
  CHECK(alpha1(0.0, 0.0, 1.0, 1.5) == 0.0);
  CHECK(alpha1(1.0, 0.0, 1.0, 1.5) == 0.0);
  CHECK(alpha1(0.5, 0.0, 1.0, 1.5) == doctest::Approx(1.0 / (3.0 * kSqrtPi)).epsilon(1e-14));
  CHECK(alpha1(0.5f, 0.0f, 1.0f, 1.5f) == doctest::Approx(1.0 / (3.0 * kSqrtPi)).epsilon(1e-6));
  CHECK_THROWS_AS(alpha1(1.5, 0.0, 1.0, 1.5), DomainError);
  CHECK_THROWS_AS(alpha1(-0.1, 0.0, 1.0, 1.5), DomainError);
}

TEST_CASE("kernel constant is the maximum of alpha1") {
  for (double p : {1.1, 1.5, 2.0}) {
    for (double T : {0.5, 1.0, 3.0}) {
      const Grid grid(T, 2001);
      const VectorXd a = alpha1_on_grid(grid, p);
      CHECK(a.maxCoeff() == doctest::Approx(kernel_constant(T, p)).epsilon(1e-12));
    }
  }
  CHECK(kernel_constant(1.0, 1.5) == doctest::Approx(1.0 / (3.0 * kSqrtPi)).epsilon(1e-14));
}

TEST_CASE("series branch of the lag coefficients matches extended precision") {
  for (double q : {1.1, 1.5, 1.9, 2.0}) {
    for (Index d = 1; d < 200; d += 3) {
      const long double x = static_cast<long double>(d);
      const long double Q = q;
      const long double direct =
          std::pow(x + 1, Q + 1) + std::pow(x - 1, Q + 1) - 2 * std::pow(x, Q + 1);
      const double value = product_trapezoid_interior(d, q);
      CHECK(value == doctest::Approx(static_cast<double>(direct)).epsilon(1e-9));
    }
    for (Index j = 1; j < 200; j += 7) {
      const long double x = static_cast<long double>(j);
      const long double Q = q;
      const long double direct = std::pow(x - 1, Q + 1) - (x - 1 - Q) * std::pow(x, Q);
      CHECK(product_trapezoid_start(j, q) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-9));
    }
  }
}

TEST_CASE("weights integrate constants exactly") {
  for (double p : {1.1, 1.5, 2.0}) {
    const Grid grid(2.0, 101);
    for (Index j : {Index{1}, Index{2}, Index{50}, Index{100}}) {
      const VectorXd w = product_trapezoid_weights(j, grid.step(), p);
      CHECK(w.size() == j + 1);
      CHECK(w.sum() == doctest::Approx(std::pow(grid.node(j), p) / fracbvp::gamma(p + 1.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("fractional integral of 1 and of s") {
  for (double p : {1.1, 1.5, 2.0}) {
    const Grid grid(1.0, 401);
    const GridFunction one = sample(grid, [](double) { return 1.0; });
    const GridFunction ramp = sample(grid, [](double s) { return s; });
    for (Index j = 0; j < grid.size(); j += 20) {
      const double t = grid.node(j);
      CHECK(std::abs(frac_integral(one, p, j)[0] - std::pow(t, p) / fracbvp::gamma(p + 1.0)) <= 1e-10);
      CHECK(std::abs(frac_integral(ramp, p, j)[0] - std::pow(t, p + 1.0) / fracbvp::gamma(p + 2.0)) <= 1e-10);
    }
  }
  const Grid grid(1.0, 11);
  const GridFunction ramp = sample(grid, [](double s) { return s; });
  // Gamma(p) I^p[s](1) = B(2, 3/2) = 4/15.
  CHECK(fracbvp::gamma(1.5) * frac_integral(ramp, 1.5, 10)[0] == doctest::Approx(4.0 / 15.0).epsilon(1e-13));
}

TEST_CASE("fractional integral invariants") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const Grid grid(1.5, 121);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    const GridFunction g1 = sample(grid, [&](double t) { return a + b * std::sin(3 * t); });
    const GridFunction g2 = sample(grid, [&](double t) { return c * t * t - a; });
    const GridFunction combo(grid, 2.0 * g1.values - 3.0 * g2.values);
    const GridFunction positive(grid, g1.values.cwiseAbs());
    for (double p : {1.2, 1.7, 2.0}) {
      CHECK(frac_integral(g1, p, 0).isZero(0.0));
      for (Index j = 0; j < grid.size(); j += 10) {
        const double lhs = frac_integral(combo, p, j)[0];
        const double rhs = 2.0 * frac_integral(g1, p, j)[0] - 3.0 * frac_integral(g2, p, j)[0];
        CHECK(std::abs(lhs - rhs) <= 1e-13 * (1.0 + std::abs(rhs)));
        CHECK(frac_integral(positive, p, j)[0] >= 0.0);
      }
    }
  }
}

TEST_CASE("integrator object agrees with the free function") {
  const Grid grid(1.0, 64);
  const GridFunction g = sample(grid, [](double t) { return std::exp(-t) * std::cos(5 * t); });
  const FractionalIntegrator integral(grid, 1.5);
  const GridFunction all = integral.apply(g);
  for (Index j = 0; j < grid.size(); ++j) {
    CHECK(integral.at(g, j)[0] == doctest::Approx(all.values(0, j)).epsilon(1e-14));
    CHECK(frac_integral(g, 1.5, j)[0] == doctest::Approx(all.values(0, j)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(frac_integral(g, 0.9, 3), DomainError);
  CHECK_THROWS_AS(frac_integral(g, 1.5, 64), DomainError);
}

TEST_CASE("boundary-corrected integral vanishes at both ends") {
  const Grid grid(2.0, 81);
  const GridFunction g = sample(grid, [](double t) { return 1.0 + t * t; });
  const GridFunction corrected = boundary_corrected_integral(FractionalIntegrator(grid, 1.3), g);
  CHECK(corrected.values(0, 0) == 0.0);
  CHECK(std::abs(corrected.values(0, 80)) <= 1e-15);
}

TEST_CASE("Caputo derivative of polynomials") {
  const Grid grid(1.0, 401);
  const GridFunction line = sample(grid, [](double t) { return 3.0 - 2.0 * t; });
  const GridFunction d_line = caputo_derivative(line, 1.5, VectorXd::Constant(1, -2.0));
  CHECK(d_line.sup_abs()[0] <= 1e-9);
  CHECK(caputo_derivative(line, 1.5).sup_abs()[0] <= 1e-9);

  const GridFunction square = sample(grid, [](double t) { return t * t; });
  const GridFunction d_square = caputo_derivative(square, 1.5, VectorXd::Zero(1));
  // cD^{3/2} t^2 = 2 t^{1/2} / Gamma(3/2); at t = 1 this is 4 / sqrt(pi).
  CHECK(d_square.values(0, 400) == doctest::Approx(2.2567583342).epsilon(5e-3));

  const GridFunction power = sample(grid, [](double t) { return std::pow(t, 1.5); });
  const GridFunction d_power = caputo_derivative(power, 1.5, VectorXd::Zero(1));
  CHECK(d_power.values(0, 200) == doctest::Approx(fracbvp::gamma(2.5)).epsilon(5e-3));
}

TEST_CASE("Caputo of t^p converges at first order or better") {
  for (double p : {1.2, 1.5, 1.8}) {
    std::vector<double> errors;
    for (Index n : {Index{101}, Index{201}, Index{401}, Index{801}}) {
      const Grid grid(1.0, n);
      const GridFunction u = sample(grid, [p](double t) { return std::pow(t, p); });
      const GridFunction d = caputo_derivative(u, p, VectorXd::Zero(1));
      double err = 0.0;
      for (double frac : {0.25, 0.5, 0.75, 1.0})
        err = std::max(err, std::abs(d.values(0, grid.nearest(frac)) - fracbvp::gamma(p + 1.0)));
      errors.push_back(err);
    }
    for (std::size_t k = 0; k + 1 < errors.size(); ++k) CHECK(std::log2(errors[k] / errors[k + 1]) >= 1.0);
  }
}

TEST_CASE("Caputo derivative preconditions") {
  const Grid small(1.0, 4);
  CHECK_THROWS_AS(caputo_derivative(GridFunction(small, 1), 1.5), SizeError);
  const Grid grid(1.0, 11);
  CHECK_THROWS_AS(caputo_derivative(GridFunction(grid, 1), 2.5), DomainError);
  CHECK_THROWS_AS(caputo_derivative(GridFunction(grid, 1), 1.5, VectorXd::Zero(2)), SizeError);
}

TEST_CASE("kernel-estimate operator reproduces alpha1 on constants") {
  for (double p : {1.1, 1.5, 2.0}) {
    const Grid grid(1.7, 301);
    const VectorXd a = kernel_estimate_operator(grid, p, VectorXd::Ones(grid.size()));
    const VectorXd expected = alpha1_on_grid(grid, p);
    CHECK((a - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("boundary-corrected integral of a linear function in closed form") {
  // For p = 2, T = 1 and g(s) = 1 - 2s the corrected integral is t^2 (1 - t) / 3,
  // while alpha1(t) = t^2 (1 - t)^2. Their ratio 1 / (3 (1 - t)) exceeds 1 for t > 2/3.
  const Grid grid(1.0, 401);
  const FractionalIntegrator integral(grid, 2.0);
  const GridFunction g = sample(grid, [](double s) { return 1.0 - 2.0 * s; });
  const GridFunction corrected = boundary_corrected_integral(integral, g);
  const VectorXd bound = alpha1_on_grid(grid, 2.0);
  for (Index j = 0; j < grid.size(); ++j) {
    const double t = grid.node(j);
    CHECK(corrected.values(0, j) == doctest::Approx(t * t * (1.0 - t) / 3.0).scale(1.0).epsilon(1e-12));
  }
  CHECK(corrected.values(0, 396) > bound[396]);
  CHECK(corrected.values(0, 200) < bound[200]);
}

TEST_CASE("boundary-corrected integral of constants vanishes") {
  for (double p : {1.1, 1.5, 2.0}) {
    const Grid grid(1.3, 201);
    const GridFunction corrected =
        boundary_corrected_integral(FractionalIntegrator(grid, p), sample(grid, [](double) { return 2.5; }));
    CHECK(corrected.sup_abs()[0] <= 1e-12);
  }
}

TEST_CASE("iterated kernel estimates stay below the geometric bound in sup norm") {
  for (double p : {1.1, 1.5, 2.0}) {
    for (double T : {0.6, 1.0, 2.2}) {
      const Grid grid(T, 301);
      const double c = kernel_constant(T, p);
      VectorXd am = alpha1_on_grid(grid, p);
      for (int m = 1; m <= 5; ++m) {
        am = kernel_estimate_operator(grid, p, am);
        CHECK(am.maxCoeff() <= std::pow(c, m + 1) * (1.0 + 1e-10));
      }
    }
  }
}

TEST_CASE("the pointwise iterated estimate breaks down next to the right end") {
  // alpha_2 decays like (T - t) at the right end, alpha1 like (T - t)^p.
  const double p = 1.5;
  const Grid grid(1.0, 1001);
  const VectorXd a1 = alpha1_on_grid(grid, p);
  const VectorXd a2 = kernel_estimate_operator(grid, p, a1);
  const double c = kernel_constant(1.0, p);
  CHECK(a2[500] <= 0.6 * c * a1[500]);
  CHECK(a2[999] >= 2.0 * c * a1[999]);
}
