#include <catch_amalgamated.hpp>
#include <algorithm>

#include <cmath>

#include "fraclap/errors.hpp"
#include "fraclap/extension.hpp"

using namespace fraclap;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent closed form of the profile through the modified Bessel function.
double bessel_profile(double lambda, double s, double z) {
  const double x = std::sqrt(lambda) * z;
  return std::pow(2.0, 1.0 - 0.5 * s) / std::tgamma(0.5 * s) * std::pow(x, 0.5 * s) *
         std::cyl_bessel_k(0.5 * s, x);
}

}  // namespace

TEST_CASE("profiles against closed forms") {
  CHECK(mode_profile(0.0, 0.7, 3.0) == 1.0);
  CHECK(mode_profile(2.0, 0.7, 0.0) == 1.0);
  CHECK(std::abs(mode_profile(1.0, 1.0, 1.0) - 0.3678794) <= 1e-7);
  for (double z : {0.001, 0.1, 1.0, 3.0, 8.0}) {
    CHECK(std::abs(mode_profile(1.0, 1.0, z) - std::exp(-z)) <= 1e-8);
    CHECK(mode_profile(4.0, 1.0, z) == Approx(std::exp(-2 * z)).epsilon(1e-10));
    CHECK(mode_profile_derivative(4.0, 1.0, z) == Approx(-2 * std::exp(-2 * z)).epsilon(1e-10));
  }
  for (double s : {0.2, 0.6, 1.4, 1.9})
    for (double lambda : {0.5, 3.0, 40.0})
      for (double z : {1e-4, 0.02, 0.5, 2.0}) {
        CHECK(std::abs(mode_profile(lambda, s, z) - bessel_profile(lambda, s, z)) <= 1e-10);
      }
}

TEST_CASE("profiles are nonincreasing in (0, 1]") {
  for (double s : {0.3, 1.0, 1.7}) {
    double prev = 1.0;
    for (double z = 1e-4; z < 20; z *= 1.3) {
      const double u = mode_profile(2.0, s, z);
      CHECK(u <= prev);
      CHECK(u > 0.0);
      prev = u;
    }
  }
}

TEST_CASE("per-mode energy identity") {
  for (double lambda : {1.0, 4.0, 9.0})
    for (double s : {0.4, 1.0, 1.6}) {
      const auto p = constants(1, s);
      const double e = mode_energy(lambda, s, 40.0 / std::sqrt(lambda));
      CHECK(std::abs(p.beta_s * e - std::pow(lambda, 0.5 * s)) <= 1e-4 * std::pow(lambda, 0.5 * s));
    }
  CHECK(mode_energy(1.0, 1.0, 40.0) == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("profile ODE residual on the graded grid") {
  const auto z = graded_z_grid(8.0);
  CHECK(z.front() == 0.0);
  CHECK(z[1] == 1e-4);
  for (double s : {0.4, 1.0, 1.6})
    for (double lambda : {1.0, 9.0}) CHECK(profile_pde_residual(lambda, s, z) <= 1e-4);
}

TEST_CASE("harmonic extension on the circle") {
  const auto m = build_torus(1, {2 * kPi}, {64}, 63);
  const auto p = constants(1, 1.0);
  const auto u = sample(m, [](const Vec3& x) { return std::cos(x[0]); });
  const auto e = extend(m, u, p, graded_z_grid(10.0));
  for (std::size_t j : {0u, 10u, 60u}) {
    const auto sl = e.slice(j);
    for (std::size_t i = 0; i < m.node_count(); ++i)
      CHECK(sl[i] == Approx(std::cos(m.nodes()[i][0]) * std::exp(-e.z_grid()[j])).margin(1e-10));
  }
  // Trace reproduces the field exactly.
  const auto trace = e.slice(0);
  for (std::size_t i = 0; i < m.node_count(); ++i) CHECK(trace[i] == Approx(u[i]).margin(1e-13));

  const auto d = dtn(e);
  for (std::size_t i = 0; i < m.node_count(); ++i) CHECK(std::abs(d[i] - u[i]) <= 1e-3);

  const auto half = extend(m, u, constants(1, 0.5), graded_z_grid(10.0));
  CHECK(extension_energy(half) == Approx(2 * kPi).epsilon(1e-3));
  const auto dh = dtn(half);
  for (std::size_t i = 0; i < m.node_count(); ++i) CHECK(std::abs(dh[i] - u[i]) <= 1e-3);
}

TEST_CASE("extension of constants, single modes, and errors") {
  const auto m = build_sphere(1.0, 8, 18);
  const auto p = constants(2, 0.8);
  const Field c(m, std::vector<double>(m.node_count(), 1.5));
  const auto e = extend(m, c, p, graded_z_grid(3.0));
  for (std::size_t j = 0; j < e.z_grid().size(); j += 7)
    for (double v : e.slice(j)) CHECK(v == Approx(1.5).margin(1e-12));
  CHECK(extension_energy(e) == 0.0);
  const auto d0 = dtn(e);
  for (double v : d0.values()) CHECK(std::abs(v) <= 1e-12);

  const Field phi(m, m.eigenvector(6));
  const auto e6 = extend(m, phi, p, graded_z_grid(2.0));
  const double lam = m.eigenvalues()[6];
  const auto d = dtn(e6);
  for (std::size_t i = 0; i < m.node_count(); i += 13)
    CHECK(d[i] == Approx(std::pow(lam, 0.4) * phi[i]).margin(1e-3 * std::pow(lam, 0.4)));
  try {
    extension_energy(e6);
    FAIL("expected AccuracyError");
  } catch (const AccuracyError& err) {
    CHECK(err.suggestion() == Approx(8.0 / std::sqrt(lam)));
  }

  CHECK_THROWS_AS(extend(m, phi, p, {}), DomainError);
  CHECK_THROWS_AS(extend(m, phi, p, {0.0, 0.5, 0.2}), DomainError);
  CHECK_THROWS_AS(dtn(extend(m, phi, p, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5})), DomainError);
}

TEST_CASE("maximum principle surrogate") {
  const auto m = build_torus(2, {2 * kPi, 2 * kPi}, {24, 24}, 400);
  const auto u = sample(m, [](const Vec3& x) { return std::tanh(2 * std::sin(x[0]) * std::cos(x[1])); });
  const auto e = extend(m, u, constants(2, 0.6), graded_z_grid(2.0));
  const auto trace = e.slice(0);
  const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
  for (std::size_t j = 0; j < e.z_grid().size(); j += 5)
    for (double v : e.slice(j)) {
      CHECK(v >= *lo - 1e-8);
      CHECK(v <= *hi + 1e-8);
    }
}
