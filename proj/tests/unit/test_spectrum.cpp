#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "otpw/error.hpp"
#include "otpw/spectrum.hpp"

using namespace otpw;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("pi_p") {
  CHECK(std::abs(pi_p(2.0) - std::numbers::pi) <= 4.0 * std::numeric_limits<double>::epsilon());
  CHECK(pi_p(3.0) == doctest::Approx(3.0471).epsilon(1e-4));
  CHECK(std::abs(pi_p(1.5) - pi_p(3.0)) <= 1e-10);
  CHECK(std::abs(pi_p(1.25) - pi_p(5.0)) <= 1e-10);
  CHECK(std::abs(pi_p(3.0) - oracle::pi_p(3.0)) <= 1e-14);
}

TEST_CASE("shooting oracle reproduces the sharp 1D constant") {
  for (double p : {1.5, 2.0, 3.0}) {
    CHECK(relative(oracle::shooting_eigenvalue(p), std::pow(oracle::pi_p(p), p)) <= 1e-6);
  }
}

TEST_CASE("interval p = 2") {
  const auto est = estimate_eigenvalue(ConvexDomain::interval(0.0, 1.0), 2.0, 1024);
  CHECK(relative(est.eigenvalue, kPi2) <= 0.005);
  CHECK(std::abs(est.eigenvalue - kPi2) <= est.error_bar + 1e-9);
  REQUIRE(est.levels.size() == 3);
  CHECK(est.levels[0].resolution == 256);

  // Error shrinks as the grid doubles.
  double last = 1e300;
  for (std::size_t n : {32, 64, 128, 256, 512}) {
    const auto r = neumann_eigenvalue(discretize(ConvexDomain::interval(0.0, 1.0), n), 2.0);
    const double err = std::abs(r.eigenvalue - kPi2);
    CHECK(err < last);
    last = err;
    double mean = 0.0;
    for (std::size_t i = 0; i < r.eigenfunction.size(); ++i) mean += r.eigenfunction.grid().volumes()[i] * r.eigenfunction[i];
    CHECK(std::abs(mean) <= 1e-10);
  }
}

TEST_CASE("unit square p = 2") {
  const auto est = estimate_eigenvalue(ConvexDomain::box({0.0, 0.0}, {1.0, 1.0}), 2.0, 128);
  CHECK(relative(est.eigenvalue, kPi2) <= 0.01);
}

TEST_CASE("interval p != 2 against the shooting oracle") {
  for (double p : {3.0, 1.5}) {
    const auto est = estimate_eigenvalue(ConvexDomain::interval(0.0, 1.0), p, 1024);
    CHECK(relative(est.eigenvalue, oracle::shooting_eigenvalue(p)) <= 0.02);
  }
}

TEST_CASE("eigenvalue scaling under dilation") {
  for (double p : {2.0, 3.0}) {
    const double a = estimate_eigenvalue(ConvexDomain::interval(0.0, 1.0), p, 256).eigenvalue;
    const double b = estimate_eigenvalue(ConvexDomain::interval(0.0, 2.0), p, 256).eigenvalue;
    CHECK(relative(b, a * std::pow(2.0, -p)) <= 0.01);
  }
}

TEST_CASE("diameter lower bound on solved instances") {
  for (const auto& d : {ConvexDomain::interval(0.0, 1.0), ConvexDomain::box({0.0, 0.0}, {1.0, 0.5}),
                        ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}})}) {
    for (double p : {2.0, 3.0}) {
      const auto est = estimate_eigenvalue(d, p, d.dim() == 1 ? 256 : 32);
      CHECK(std::pow(2.0, p - 1.0) / std::pow(d.diameter(), p) <= est.eigenvalue + est.error_bar);
    }
  }
}

TEST_CASE("eigen CSV and errors") {
  CHECK_THROWS_AS(neumann_eigenvalue(discretize(ConvexDomain::interval(0.0, 1.0), 16), 1.0), Error);
  CHECK_THROWS_AS(estimate_eigenvalue(ConvexDomain::interval(0.0, 1.0), 2.0, 4), Error);
  const auto r = neumann_eigenvalue(discretize(ConvexDomain::interval(0.0, 1.0), 16), 2.0);
  std::ostringstream s;
  write_eigen_csv(s, std::span(&r, 1));
  CHECK(s.str().rfind("resolution,p,eigenvalue,residual,iterations\n16,2,", 0) == 0);
}
