#include <doctest.h>

#include <cmath>
#include <sstream>

#include "otpw/error.hpp"
#include "otpw/geodesic.hpp"
#include "otpw/rng.hpp"

using namespace otpw;

namespace {

DiscreteMeasure random_measure(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<double> pos(n * dim), w(n);
  for (auto& x : pos) x = rng.uniform();
  for (auto& x : w) x = rng.uniform(0.1, 1.0);
  return DiscreteMeasure::normalized(dim, pos, w);
}

ScalarField density_on(double a, double b, std::size_t n, const PointFunction& f) {
  return sample(discretize(ConvexDomain::interval(a, b), n), f);
}

const std::vector<double> kTimes{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

}  // namespace

TEST_CASE("displacement interpolation endpoints") {
  Rng rng(1);
  const auto mu = random_measure(rng, 6, 2), nu = random_measure(rng, 8, 2);
  const auto plan = wasserstein_exact(mu, nu, 2.0).plan;
  const auto start = displacement_interpolate(plan, 0.0).measure;
  const auto end = displacement_interpolate(plan, 1.0).measure;
  CHECK(wasserstein_exact(start, mu, 2.0).distance <= 1e-12);
  CHECK(wasserstein_exact(end, nu, 2.0).distance <= 1e-12);
  CHECK(start.size() <= mu.size());

  const double zero[1] = {0.0}, one[1] = {1.0};
  const auto dirac = wasserstein_exact(DiscreteMeasure::dirac(zero), DiscreteMeasure::dirac(one), 2.0).plan;
  const auto mid = displacement_interpolate(dirac, 0.5).measure;
  REQUIRE(mid.size() == 1);
  CHECK(mid.position(0)[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(displacement_interpolate(dirac, 1.5), Error);
}

TEST_CASE("constant speed along exact plans") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t dim = 1 + trial % 2;
    const auto mu = random_measure(rng, 20 + trial, dim), nu = random_measure(rng, 25, dim);
    for (double m : {2.0, 3.0}) {
      const auto full = wasserstein_exact(mu, nu, m);
      for (double t : {0.25, 0.5, 0.75}) {
        const auto mid = displacement_interpolate(full.plan, t).measure;
        CHECK(std::abs(wasserstein_exact(mu, mid, m).distance - t * full.distance) <= 1e-6 * full.distance);
      }
    }
  }
}

TEST_CASE("interpolated atoms stay in the convex domain") {
  const auto d = ConvexDomain::polygon({{0, 0}, {2, 0}, {1.5, 1.5}, {0.2, 1.0}});
  const auto g = discretize(d, 10);
  const auto a = from_density(sample(g, [](auto x) { return 1.0 + x[0]; }));
  const auto b = from_density(sample(g, [](auto x) { return 1.0 + x[1] * x[1]; }));
  const auto plan = wasserstein_exact(a, b, 2.0).plan;
  for (double t : kTimes) CHECK(displacement_interpolate(plan, t).measure.inside(d, 1e-12));
}

TEST_CASE("1D density interpolant closed forms") {
  const auto f = density_on(0.0, 1.0, 64, [](auto x) { return 1.0 + x[0]; });
  for (double t : {0.0, 0.3, 1.0}) {
    const auto ft = interpolant_density_1d(f, f, t).density;
    const double mass = lr_norm(f, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(ft[i] == doctest::Approx(f[i] / mass).epsilon(1e-12));
  }

  // Translation: uniform(0,1) -> uniform(1,2) at t = 1/2 is uniform on (1/2, 3/2).
  const auto u0 = density_on(0.0, 1.0, 64, [](auto) { return 1.0; });
  const auto u1 = density_on(1.0, 2.0, 64, [](auto) { return 1.0; });
  const auto shifted = interpolant_density_1d(u0, u1, 0.5);
  const auto& g = shifted.density.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.node(i)[0];
    CHECK(shifted.density[i] == doctest::Approx(x > 0.5 && x < 1.5 ? 1.0 : 0.0).epsilon(1e-12));
  }

  // Contraction T(x) = x/2: at t = 1/2 uniform on (0, 3/4) with density 4/3.
  const auto half = density_on(0.0, 0.5, 32, [](auto) { return 1.0; });
  const auto contracted = interpolant_density_1d(u0, half, 0.5).density;
  for (std::size_t i = 0; i < contracted.size(); ++i) {
    const double x = contracted.grid().node(i)[0];
    CHECK(contracted[i] == doctest::Approx(x < 0.75 ? 4.0 / 3.0 : 0.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(interpolant_density_1d(density_on(0, 1, 8, [](auto x) { return x[0] - 0.5; }), u0, 0.5), Error);
  CHECK_THROWS_AS(interpolant_density_1d(density_on(0, 1, 8, [](auto) { return 0.0; }), u0, 0.5), Error);
}

TEST_CASE("L^q convexity along the 1D geodesic") {
  const auto f = density_on(0.0, 1.0, 128, [](auto x) { return 1.0 + std::sin(3.0 * x[0]); });
  CHECK(std::abs(lq_convexity_check(f, f, 2.0, kTimes).max_violation) <= 1e-13);

  const auto u0 = density_on(0.0, 1.0, 256, [](auto) { return 1.0; });
  const auto u1 = density_on(1.0, 2.0, 256, [](auto) { return 1.0; });
  for (double q : {1.0, 2.0, 3.0}) CHECK(lq_convexity_check(u0, u1, q, kTimes).max_violation <= 1e-8);

  const auto tri = density_on(0.0, 1.0, 1024, [](auto x) { return 2.0 * x[0]; });
  const auto uni = density_on(0.0, 1.0, 1024, [](auto) { return 1.0; });
  CHECK(lq_convexity_check(uni, tri, 2.0, kTimes).max_violation <= 1e-4);
}

TEST_CASE("density and plan interpolation agree in 1D") {
  for (std::size_t n : {64, 256}) {
    const auto f0 = density_on(0.0, 1.0, n, [](auto x) { return 1.0 + x[0]; });
    const auto f1 = density_on(0.0, 1.0, n, [](auto x) { return 2.0 - 1.5 * x[0]; });
    const auto plan = monotone_transport_1d(from_density(f0), from_density(f1), 1.0).plan;
    for (double t : {0.25, 0.5, 0.75}) {
      const auto by_plan = displacement_interpolate(plan, t).measure;
      const auto by_density = from_density(interpolant_density_1d(f0, f1, t).density);
      CHECK(wasserstein_1d(by_plan, by_density, 1.0) <= 2.0 / static_cast<double>(n));
    }
  }
}

TEST_CASE("geodesic CSV") {
  const double zero[1] = {0.0};
  std::vector<GeodesicSample> s{{0.5, DiscreteMeasure::dirac(zero), std::nullopt}};
  std::ostringstream out;
  write_geodesic_csv(out, s);
  CHECK(out.str() == "t,x1,weight\n0.5,0,1\n");
}
