#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "hjprox/analytic.hpp"
#include "hjprox/quadrature.hpp"

using namespace hjprox;

TEST_CASE("zero function: envelope 0, proximal x, gradient 0") {
  auto zero = [](double) { return 0.0; };
  for (double x : {-1.5, 0.0, 2.0}) {
    const auto r = quadrature_reference_1d(x, 0.3, zero, 0.2);
    CHECK(std::abs(r.u_value) < 1e-8);
    CHECK(std::abs(r.prox - x) < 1e-8);
    CHECK(std::abs(r.u_gradient) < 1e-7);
  }
}

TEST_CASE("quadratic family is exact for every delta") {
  // For f(y) = y^2 + y the smoothed proximal equals the true proximal at any
  // viscosity, and the envelope value differs from the exact envelope by
  // exactly (delta/2) ln(1 + 2t).
  auto f = [](double y) { return y * y + y; };
  const double t = 0.5;
  for (double delta : {1.0, 0.1, 0.01}) {
    for (double x : {-2.0, 0.3, 1.7}) {
      const auto r = quadrature_reference_1d(x, t, f, delta);
      const double prox_true = (x - t) / (1.0 + 2.0 * t);
      CHECK(std::abs(r.prox - prox_true) < 1e-7);
      const double u_true = f(prox_true) +
                            (prox_true - x) * (prox_true - x) / (2.0 * t);
      const double bias = 0.5 * delta * std::log(1.0 + 2.0 * t);
      CHECK(r.u_value - u_true == Catch::Approx(bias).margin(1e-7));
    }
  }
}

TEST_CASE("shrink recovered as delta -> 0") {
  auto f = [](double y) { return std::abs(y); };
  const double x = 3.0, t = 0.1;
  double prev_err = std::numeric_limits<double>::infinity();
  for (double delta : {0.5, 0.1, 0.02}) {
    const auto r = quadrature_reference_1d(x, t, f, delta);
    const double err = std::abs(r.prox - 2.9);
    CHECK(err < prev_err + 1e-12);
    prev_err = err;
  }
  CHECK(prev_err < 1e-3);
}

TEST_CASE("log-space evaluation survives tiny delta") {
  auto f = [](double y) { return std::abs(y); };
  const auto r = quadrature_reference_1d(3.0, 0.1, f, 1e-4);
  CHECK(std::isfinite(r.u_value));
  CHECK(std::abs(r.prox - 2.9) < 1e-3);
}

TEST_CASE("gradient matches central finite differences of the value") {
  auto f = [](double y) {
    return y > 0.0 ? y * y - std::log(y)
                   : std::numeric_limits<double>::infinity();
  };
  const double t = 0.5, delta = 0.1, h = 1e-5;
  for (double x : {0.5, 1.0, 2.5}) {
    const auto r = quadrature_reference_1d(x, t, f, delta);
    const auto rp = quadrature_reference_1d(x + h, t, f, delta);
    const auto rm = quadrature_reference_1d(x - h, t, f, delta);
    const double fd = (rp.u_value - rm.u_value) / (2.0 * h);
    CHECK(r.u_gradient == Catch::Approx(fd).margin(1e-4));
  }
}

TEST_CASE("infinite integrand over the whole window is degenerate") {
  auto inf = [](double) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(quadrature_reference_1d(0.0, 0.1, inf, 0.1),
                  DegenerateError);
  // log barrier far in the infeasible region: every window node is infeasible
  auto barrier = [](double y) {
    return y > 0.0 ? -std::log(y) : std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(quadrature_reference_1d(-50.0, 0.01, barrier, 0.01),
                  DegenerateError);
}

TEST_CASE("partially infeasible windows integrate over the feasible part") {
  auto barrier = [](double y) {
    return y > 0.0 ? -std::log(y) : std::numeric_limits<double>::infinity();
  };
  const double t = 2.0, delta = 0.1, x = 0.2;
  const auto r = quadrature_reference_1d(x, t, barrier, delta);
  CHECK(std::isfinite(r.u_value));
  CHECK(r.prox > 0.0);
}

TEST_CASE("rescaled inputs (t/a, a f) match (t, f) away from kinks") {
  // Powering the integrand is equivalent to running the original problem at
  // viscosity delta/a; at these test points the finite-viscosity bias is far
  // below the quadrature tolerance, so the two parameterizations agree.
  auto quad = [](double y) { return y * y + y; };
  auto l1 = [](double y) { return std::abs(y); };
  for (double a : {0.5, 0.25}) {
    for (double x : {-1.0, 0.5, 2.0}) {
      const auto base = quadrature_reference_1d(x, 0.5, quad, 0.05);
      auto scaled_f = [a, quad](double y) { return a * quad(y); };
      const auto resc = quadrature_reference_1d(x, 0.5 / a, scaled_f, 0.05);
      CHECK(resc.prox == Catch::Approx(base.prox).margin(2e-8));
    }
    const auto base = quadrature_reference_1d(3.0, 0.1, l1, 0.05);
    auto scaled_l1 = [a, l1](double y) { return a * l1(y); };
    const auto resc = quadrature_reference_1d(3.0, 0.1 / a, scaled_l1, 0.05);
    CHECK(resc.prox == Catch::Approx(base.prox).margin(2e-8));
  }
}
