#include <doctest.h>

#include <cmath>
#include <numbers>

#include "otpw/domain.hpp"
#include "otpw/error.hpp"
#include "otpw/rng.hpp"

using namespace otpw;

TEST_CASE("domain construction and volume") {
  const auto unit = ConvexDomain::interval(0.0, 1.0);
  CHECK(unit.volume() == doctest::Approx(1.0));
  CHECK(unit.dim() == 1);
  const auto half = ConvexDomain::box({0.0, 0.0}, {1.0, 0.5});
  CHECK(half.volume() == doctest::Approx(0.5));

  try {
    ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    FAIL("self-crossing polygon accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConvex);
  }
  CHECK_THROWS_AS(ConvexDomain::interval(1.0, 1.0), Error);
  CHECK_THROWS_AS(ConvexDomain::polygon({{0, 0}, {1, 0}, {2, 0}}), Error);

  const auto tri = ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}});
  CHECK(tri.volume() == doctest::Approx(0.5).epsilon(1e-14));
  for (int n : {1, 2, 4, 8}) {
    const auto box = ConvexDomain::box({0.0, 0.0}, {1.0, 1.0 / n});
    CHECK(box.volume() == doctest::Approx(1.0 / n));
    CHECK(box.diameter() == doctest::Approx(std::sqrt(1.0 + 1.0 / (n * n))).epsilon(1e-14));
  }
}

TEST_CASE("diameter") {
  CHECK(ConvexDomain::interval(0.0, 1.0).diameter() == doctest::Approx(1.0));
  CHECK(ConvexDomain::box({0.0, 0.0}, {1.0, 1.0}).diameter() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}}).diameter() == doctest::Approx(std::sqrt(2.0)));
  const auto ends = ConvexDomain::box({0.0, 0.0, 0.0}, {1.0, 2.0, 2.0}).diameter_endpoints();
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) d2 += (ends[0][k] - ends[1][k]) * (ends[0][k] - ends[1][k]);
  CHECK(std::sqrt(d2) == doctest::Approx(3.0));
}

TEST_CASE("diameter is invariant under rigid motions") {
  Rng rng(11);
  const std::vector<Vec2> base{{0.0, 0.0}, {2.0, 0.1}, {2.5, 1.2}, {1.0, 2.0}, {-0.3, 1.0}};
  const double d0 = ConvexDomain::polygon(base).diameter();
  const double a0 = ConvexDomain::polygon(base).volume();
  for (int trial = 0; trial < 50; ++trial) {
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double tx = rng.uniform(-5, 5), ty = rng.uniform(-5, 5);
    std::vector<Vec2> moved;
    for (const auto& v : base) {
      moved.push_back({std::cos(th) * v[0] - std::sin(th) * v[1] + tx, std::sin(th) * v[0] + std::cos(th) * v[1] + ty});
    }
    const auto d = ConvexDomain::polygon(moved);
    CHECK(std::abs(d.diameter() - d0) <= 1e-10);
    CHECK(std::abs(d.volume() - a0) <= 1e-10);
  }
}

TEST_CASE("discretization") {
  const auto g4 = discretize(ConvexDomain::interval(0.0, 1.0), 4);
  REQUIRE(g4->size() == 4);
  for (double v : g4->volumes()) CHECK(v == doctest::Approx(0.25));
  CHECK(g4->node(0)[0] == doctest::Approx(0.125));

  const auto g3 = discretize(ConvexDomain::box({0.0, 0.0}, {1.0, 1.0}), 3);
  REQUIRE(g3->size() == 9);
  for (double v : g3->volumes()) CHECK(v == doctest::Approx(1.0 / 9.0));

  const auto tri = ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}});
  CHECK(std::abs(discretize(tri, 64)->total_volume() - 0.5) <= 1e-6);

  CHECK_THROWS_AS(discretize(ConvexDomain::interval(0.0, 1.0), 1), Error);
}

TEST_CASE("discrete volume converges to the domain volume") {
  const auto box = ConvexDomain::box({0.0, -1.0}, {2.0, 0.5});
  double last_err = 1.0;
  for (std::size_t r : {2, 4, 8, 16, 32}) {
    const double err = std::abs(discretize(box, r)->total_volume() - box.volume());
    CHECK(err <= last_err + 1e-15);
    last_err = err;
  }
  const auto quad = ConvexDomain::polygon({{0.1, 0.0}, {1.3, 0.2}, {1.0, 1.1}, {0.0, 0.8}});
  for (std::size_t r : {8, 16, 32, 64}) {
    const double err = std::abs(discretize(quad, r)->total_volume() - quad.volume());
    CHECK(err <= 1.0 / static_cast<double>(r));
  }
}

TEST_CASE("grid nodes stay within the diameter") {
  for (const auto& d : {ConvexDomain::polygon({{0, 0}, {1, 0}, {0.2, 0.9}}),
                        ConvexDomain::box({0.0, 0.0}, {1.0, 0.25}), ConvexDomain::interval(-1.0, 2.0)}) {
    const auto g = discretize(d, 24);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      CHECK(d.contains(g->node(i), 1e-12));
      for (std::size_t j = i + 1; j < g->size(); ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < g->dim(); ++k) s += std::pow(g->node(i)[k] - g->node(j)[k], 2);
        worst = std::max(worst, std::sqrt(s));
      }
    }
    CHECK(worst <= d.diameter() + 1e-12);
  }
}

TEST_CASE("labels are CSV safe") {
  for (const auto& d : {ConvexDomain::polygon({{0, 0}, {1, 0}, {0, 1}}), ConvexDomain::box({0.0, 0.0}, {1.0, 0.5}),
                        ConvexDomain::interval(0.0, 1.0)}) {
    CHECK(d.label().find(',') == std::string::npos);
    CHECK(!d.label().empty());
  }
}
