#include <catch_amalgamated.hpp>

#include <cmath>

#include "fraclap/errors.hpp"
#include "fraclap/heat.hpp"

using namespace fraclap;
using Catch::Approx;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("heat kernel tends to the inverse volume") {
  const auto m = build_torus(1, {2 * kPi}, {64}, 63);
  HeatEvaluator h(m);
  CHECK(heat_kernel(h, 0, 17, 60.0) == Approx(1.0 / (2 * kPi)).epsilon(1e-14));
  CHECK_THROWS_AS(heat_kernel(h, 0, 1, 0.0), DomainError);
  CHECK(h.t_gauss() == Approx(std::log(1e3) / (31.0 * 31.0)));
}

TEST_CASE("heat kernel conserves mass and is symmetric") {
  const auto torus = build_torus(2, {2.0, 3.0}, {12, 16}, 150);
  const auto sphere = build_sphere(1.0, 10, 22);
  const auto mesh = build_mesh(icosphere_off(2), 30, 1.0);
  for (const SpectralManifold* m : {&torus, &sphere, &mesh}) {
    HeatEvaluator h(*m);
    for (double t : {h.t_gauss(), 3 * h.t_gauss(), 0.7}) {
      for (std::size_t p : {0u, 5u, 33u}) {
        double mass = 0.0;
        for (std::size_t q = 0; q < m->node_count(); ++q) {
          const double v = heat_kernel(h, p, q, t);
          CHECK(v == heat_kernel(h, q, p, t));
          mass += m->weights()[q] * v;
        }
        CHECK(std::abs(mass - 1.0) <= 1e-10);
      }
    }
  }
}

TEST_CASE("torus eigensum agrees with the lattice-image oracle") {
  const auto m = build_torus(1, {2 * kPi}, {256}, 255);
  HeatEvaluator h(m);
  const std::vector<double> L{2 * kPi};
  for (double t : {0.05, 0.5, 2.0}) {
    const int r = required_image_radius(L, t);
    for (std::size_t q : {0u, 9u, 128u, 200u}) {
      const double img = heat_kernel_torus_images(L, m.nodes()[0], m.nodes()[q], t, r);
      const double tol = t == 0.5 ? 1e-10 : 1e-8;
      CHECK(std::abs(heat_kernel(h, 0, q, t) - img) <= tol);
    }
  }
  const auto m2 = build_torus(2, {2.0, 3.5}, {24, 40}, 897);
  HeatEvaluator h2(m2);
  const std::vector<double> L2{2.0, 3.5};
  for (double t : {0.02, 0.3})
    for (std::size_t q : {0u, 41u, 500u}) {
      const double img = heat_kernel_torus_images(L2, m2.nodes()[3], m2.nodes()[q], t,
                                                  required_image_radius(L2, t));
      CHECK(std::abs(heat_kernel(h2, 3, q, t) - img) <= std::max(1e-8, h2.truncation_bound(t)));
    }
}

TEST_CASE("lattice-image oracle: tail control and mass") {
  const std::vector<double> L{2 * kPi};
  // Images beyond the nearest are negligible at small t.
  const double near = heat_kernel_torus_images(L, {0, 0, 0}, {0.3, 0, 0}, 0.01, 1);
  CHECK(near == Approx(std::exp(-0.09 / 0.04) / std::sqrt(4 * kPi * 0.01)).epsilon(1e-14));
  try {
    heat_kernel_torus_images(L, {0, 0, 0}, {1, 0, 0}, 5.0, 0);
    FAIL("expected AccuracyError");
  } catch (const AccuracyError& e) {
    CHECK(e.suggestion() == required_image_radius(L, 5.0));
    CHECK(e.bound() > 1e-14);
  }
  for (double t : {0.01, 0.3, 4.0}) {
    const int n = 400;
    const int r = required_image_radius(L, t);
    double mass = 0.0;
    for (int i = 0; i < n; ++i)
      mass += heat_kernel_torus_images(L, {0, 0, 0}, {2 * kPi * i / n, 0, 0}, t, r) * 2 * kPi / n;
    CHECK(std::abs(mass - 1.0) <= 1e-12);
  }
}

TEST_CASE("heat semigroup in modal form") {
  const auto m = build_sphere(1.0, 6, 14);
  HeatEvaluator h(m);
  const Field phi(m, m.eigenvector(5));
  const auto out = heat_apply(h, phi, 0.3);
  for (std::size_t i = 0; i < m.node_count(); ++i)
    CHECK(out[i] == Approx(std::exp(-m.eigenvalues()[5] * 0.3) * phi[i]).margin(1e-13));

  const auto u = sample(m, [](const Vec3& x) { return std::exp(x[0]) + x[1] * x[2]; });
  const auto a = heat_apply(h, heat_apply(h, u, 0.2), 0.15);
  const auto b = heat_apply(h, u, 0.35);
  for (std::size_t i = 0; i < m.node_count(); ++i) CHECK(a[i] == Approx(b[i]).margin(1e-12));

  const Field c(m, std::vector<double>(m.node_count(), 2.5));
  const auto cc = heat_apply(h, c, 4.0);
  for (std::size_t i = 0; i < m.node_count(); ++i) CHECK(cc[i] == Approx(2.5).margin(1e-12));
  CHECK_THROWS_AS(heat_apply(h, c, -1.0), DomainError);
  const auto other = build_sphere(1.0, 6, 14);
  CHECK_THROWS_AS(heat_apply(h, Field(other, c.values()), 1.0), DomainError);
}

TEST_CASE("heat traces carry reliability flags") {
  const auto m = build_torus(1, {2 * kPi}, {32}, 31);
  HeatEvaluator h(m);
  const auto rows = heat_trace(h, 0, 3, {h.t_gauss() / 10, h.t_gauss(), 1.0});
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].reliable);
  CHECK(rows[1].reliable);
  CHECK(rows[2].reliable);
  const auto env = gaussian_envelope(h, 0, {0.3, 0.5, 1.0}, 8.0);
  CHECK(env.lower > 0.0);
  CHECK(env.upper >= env.lower);
}
