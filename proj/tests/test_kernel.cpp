#include <catch_amalgamated.hpp>

#include <cmath>

#include "fraclap/errors.hpp"
#include "fraclap/kernel.hpp"

using namespace fraclap;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Periodic sum of the Euclidean kernel on a circle of length L, with an
// Euler-Maclaurin tail beyond |m| = 2000.
double periodized_kernel_1d(double x, double L, const FracParams& p) {
  const double q = 1.0 + p.s;
  double sum = 0.0;
  const int M = 2000;
  for (int m = -M; m <= M; ++m) sum += std::pow(std::abs(x + m * L), -q);
  for (double sign : {1.0, -1.0}) {
    const double a = (M + 1) * L + sign * x;  // first omitted distance
    sum += std::pow(a, 1.0 - q) / ((q - 1.0) * L) + 0.5 * std::pow(a, -q) +
           q * L * std::pow(a, -q - 1.0) / 12.0;
  }
  return p.alpha_ns * sum;
}

}  // namespace

TEST_CASE("constants: printed forms and reference values") {
  CHECK(constants(1, 1.0).alpha_ns == Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(std::abs(constants(3, 1.0).beta_s - 1.0) <= 1e-14);
  CHECK(constants(2, 0.5).beta_s == Approx(2.09210).margin(5e-6));
  CHECK(constants(2, 0.5).beta_s ==
        Approx(std::pow(2.0, -0.5) * std::tgamma(0.25) / std::tgamma(0.75)).epsilon(1e-14));
  for (int n = 1; n <= 4; ++n)
    for (double s : {0.1, 0.5, 0.9, 1.3, 1.9}) {
      const auto p = constants(n, s);
      CHECK(std::abs(p.alpha_ns / alpha_abs_gamma_form(n, s) - 1.0) <= 1e-12);
      CHECK(p.alpha_ns > 0.0);
      CHECK(p.beta_s > 0.0);
      CHECK(p.c_s == Approx(0.5 * s / std::tgamma(1 - 0.5 * s)).epsilon(1e-15));
    }
  CHECK_THROWS_AS(constants(1, 0.0), DomainError);
  CHECK_THROWS_AS(constants(1, 2.0), DomainError);
  CHECK_THROWS_AS(constants(0, 1.0), DomainError);
}

TEST_CASE("subordination self-test over the 18-case grid") {
  for (int n : {1, 2})
    for (double s : {0.3, 1.0, 1.7})
      for (double d : {0.1, 1.0, 10.0}) CHECK(subordination_self_test(n, s, d) <= 1e-8);
}

TEST_CASE("torus kernel equals the periodized Euclidean kernel") {
  const auto m = build_torus(1, {2 * kPi}, {128}, 127);
  for (double s : {0.3, 1.0, 1.7}) {
    const auto p = constants(1, s);
    SingularKernel k(m, p);
    for (std::size_t q : {1u, 5u, 40u, 64u}) {
      const double x = m.nodes()[q][0];
      CHECK(std::abs(k.evaluate(0, q).value / periodized_kernel_1d(x, 2 * kPi, p) - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("Euclidean recovery at short range and symmetry") {
  const auto m = build_torus(1, {20.0}, {1000}, 999);
  const auto p = constants(1, 0.6);
  const auto quad = default_quadrature(m, p);
  const double d = m.distance(0, 10);
  REQUIRE(d == Approx(0.2));
  const double ratio = ks(m, 0, 10, p, quad) * std::pow(d, 1.6) / p.alpha_ns;
  CHECK(ratio >= 0.95);
  CHECK(ratio <= 1.05);
  SingularKernel k(m, p, quad);
  for (std::size_t q : {3u, 77u, 510u}) CHECK(k.evaluate(7, q).value == k.evaluate(q, 7).value);
  CHECK_THROWS_AS(k.evaluate(4, 4), SingularityError);
  CHECK_THROWS_AS(k.evaluate(4, 5, Regularization::gaussian_factor, 0.0), DomainError);
}

TEST_CASE("scaling law under dilation of the torus") {
  const auto p = constants(2, 0.8);
  const auto base = build_torus(2, {3.0, 4.0}, {16, 20}, 285);
  SingularKernel k(base, p);
  for (double r : {0.5, 2.0}) {
    const auto scaled = build_torus(2, {3.0 * r, 4.0 * r}, {16, 20}, 285);
    SingularKernel ks_scaled(scaled, p);
    for (std::size_t q : {1u, 21u, 170u, 319u}) {
      const double expect = std::pow(r, -(2 + 0.8)) * k.evaluate(0, q).value;
      CHECK(std::abs(ks_scaled.evaluate(0, q).value / expect - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("regularized kernels: closed form, monotonicity, diagonal") {
  const auto m = build_torus(1, {20.0}, {1000}, 999);
  const auto p = constants(1, 0.6);
  const auto quad = default_quadrature(m, p);
  const double euclid = p.alpha_ns / std::pow(0.2 * 0.2 + 0.05 * 0.05, 0.8);
  CHECK(std::abs(ks_eps(m, 0, 10, 0.05, p, quad) / euclid - 1.0) <= 5e-2);

  SingularKernel k(m, p, quad);
  for (auto reg : {Regularization::gaussian_factor, Regularization::t_truncation}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.001, 0.01, 0.05, 0.2, 1.0}) {
      const double v = k.evaluate(0, 10, reg, eps).value;
      CHECK(v <= prev);
      CHECK(v > 0.0);
      prev = v;
    }
    // Converges up to K_s as eps decreases.
    CHECK(k.evaluate(0, 10, reg, 1e-4).value == Approx(k.evaluate(0, 10).value).epsilon(1e-4));
  }
  const double eps = 0.05;
  const double diag = k.evaluate(3, 3, Regularization::gaussian_factor, eps).value;
  CHECK(diag == Approx(p.alpha_ns / std::pow(eps, 1.6)).epsilon(1e-2));
}

TEST_CASE("kernel rows use the row symmetry") {
  const auto m = build_sphere(1.0, 16, 34);
  const auto p = constants(2, 0.7);
  SingularKernel k(m, p);
  const auto row = k.row(40);
  CHECK(row[40] == 0.0);
  for (std::size_t q : {0u, 41u, 300u, 577u}) CHECK(row[q] == Approx(k.evaluate(40, q).value).epsilon(1e-12));
  const auto reg = k.row(40, Regularization::gaussian_factor, 0.1);
  CHECK(reg[40] > 0.0);
}

TEST_CASE("sphere kernel: refinement consistency within the reported bound") {
  const auto p = constants(2, 0.5);
  const auto coarse = build_sphere(1.0, 24, 50);
  const auto fine = build_sphere(1.0, 48, 98);
  SingularKernel kc(coarse, p), kf(fine, p);
  const Vec3 x{0, 0, 1};
  for (double d : {0.05, 0.2, 0.8, 2.0}) {
    const Vec3 y{std::sin(d), 0, std::cos(d)};
    const auto a = kc.evaluate_points(x, y), b = kf.evaluate_points(x, y);
    CHECK(std::abs(a.value - b.value) <= a.error_bound + b.error_bound + 1e-8 * a.value);
    CHECK(a.value > 0.0);
  }
  const auto& fit = fitted_surrogate_defect();
  CHECK(fit.C > 0.0);
  CHECK(fit.c > 0.0);
}

TEST_CASE("asymptotic defect report") {
  const auto p = constants(2, 0.6);
  const auto m = build_sphere(1.0, 40, 82);
  const auto quad = default_quadrature(m, p);
  std::vector<double> radii;
  for (double r = 0.3; r >= 0.01; r /= 1.6) radii.push_back(r);
  const auto rows = asymptotic_defect_report(m, 100, {{1, 0, 0}, {0, 1, 0}}, radii, p, quad);
  REQUIRE(rows.size() == 2 * radii.size());
  for (const auto& r : rows) CHECK(r.normalized_defect < 1.0);
  CHECK_THROWS_AS(asymptotic_defect_report(m, 0, {{1, 0, 0}}, {1.0}, p, quad), DomainError);

  // Flat circle: the only deviation from the Euclidean model is the smooth
  // periodic remainder, so the normalized defect vanishes with |z|.
  const auto t = build_torus(1, {2 * kPi}, {256}, 255);
  const auto p1 = constants(1, 0.6);
  const auto flat = asymptotic_defect_report(t, 0, {{1, 0, 0}}, {0.4, 0.1, 0.025}, p1,
                                             default_quadrature(t, p1));
  for (const auto& r : flat) {
    const double images = periodized_kernel_1d(r.radius, 2 * kPi, p1) - r.model;
    CHECK(std::abs(r.normalized_defect - images * std::pow(r.radius, 0.6)) <= 1e-6);
  }
  CHECK(flat[2].normalized_defect < flat[1].normalized_defect);
}
