#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fraclap/errors.hpp"
#include "fraclap/manifold.hpp"

using namespace fraclap;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Periodic spectral second-derivative matrix on [0, 2 pi) with even N.
std::vector<std::vector<double>> periodic_d2(int n) {
  const double h = 2.0 * kPi / n;
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        d[i][j] = -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0;
      } else {
        const double s = std::sin((i - j) * h / 2.0);
        d[i][j] = -((i - j) % 2 == 0 ? 1.0 : -1.0) / (2.0 * s * s);
      }
    }
  return d;
}

double sphere_laplacian_fd(const SpectralManifold& m, const std::vector<double>& c, double theta,
                           double phi) {
  auto f = [&](double th, double ph) {
    return m.evaluate_at({std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)},
                         c);
  };
  const double h = 1e-3;
  const double st = std::sin(theta);
  const double ft = (std::sin(theta + h / 2) * (f(theta + h, phi) - f(theta, phi)) -
                     std::sin(theta - h / 2) * (f(theta, phi) - f(theta - h, phi))) /
                    (h * h * st);
  const double fp = (f(theta, phi + h) - 2 * f(theta, phi) + f(theta, phi - h)) / (h * h * st * st);
  return ft + fp;
}

}  // namespace

TEST_CASE("torus spectrum matches Fourier modes with spectral residual") {
  const auto m = build_torus(1, {2 * kPi}, {256}, 7);
  const std::vector<double> expect{0, 1, 1, 4, 4, 9, 9};
  for (std::size_t k = 0; k < 7; ++k) REQUIRE(m.eigenvalues()[k] == Approx(expect[k]).margin(1e-12));
  const auto d2 = periodic_d2(256);
  for (std::size_t k = 0; k < 7; ++k) {
    const auto phi = m.eigenvector(k);
    double worst = 0.0;
    for (int i = 0; i < 256; ++i) {
      double s = 0.0;
      for (int j = 0; j < 256; ++j) s += d2[i][j] * phi[j];
      worst = std::max(worst, std::abs(s + m.eigenvalues()[k] * phi[i]));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("torus constant mode, volume and Gram") {
  const auto m = build_torus(2, {2 * kPi, 2 * kPi}, {16, 12}, 40);
  CHECK(m.volume() == Approx(4 * kPi * kPi).epsilon(1e-14));
  for (double v : m.eigenvector(0)) CHECK(v == Approx(1.0 / std::sqrt(m.volume())).epsilon(1e-14));
  CHECK(m.gram_deviation() <= 1e-8);
  for (std::size_t k = 1; k < m.mode_count(); ++k)
    CHECK(m.eigenvalues()[k] >= m.eigenvalues()[k - 1]);
}

TEST_CASE("torus input validation") {
  CHECK_THROWS_AS(build_torus(1, {2 * kPi}, {8}, 9), CapacityError);
  CHECK_THROWS_AS(build_torus(1, {-1.0}, {8}, 3), DomainError);
  CHECK_THROWS_AS(build_torus(1, {1.0}, {3}, 1), DomainError);
  CHECK_NOTHROW(build_torus(1, {1.0}, {9}, 9));
}

TEST_CASE("torus transforms are consistent with nodal eigenvectors") {
  const auto m = build_torus(2, {3.0, 5.0}, {10, 14}, 60);
  std::mt19937 rng(7);
  std::normal_distribution<double> g;
  std::vector<double> c(m.mode_count());
  for (double& v : c) v = g(rng);
  const auto u = m.synthesize(c);
  std::vector<double> direct(m.node_count(), 0.0);
  for (std::size_t k = 0; k < c.size(); ++k)
    for (std::size_t i = 0; i < u.size(); ++i) direct[i] += c[k] * m.eigenfunction(k, i);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == Approx(direct[i]).margin(1e-12));
  const auto back = m.project(u);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(back[k] == Approx(c[k]).margin(1e-12));

  const auto grad = m.synthesize_gradient(c);
  for (std::size_t i = 0; i < u.size(); i += 7) {
    Vec3 ref{0, 0, 0};
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto gk = m.eigenfunction_gradient(k, i);
      for (int d = 0; d < 2; ++d) ref[d] += c[k] * gk[d];
    }
    for (int d = 0; d < 2; ++d) CHECK(grad[i][d] == Approx(ref[d]).margin(1e-11));
    CHECK(m.evaluate_at(m.nodes()[i], c) == Approx(u[i]).margin(1e-12));
  }
}

TEST_CASE("torus modal sums and row symmetry") {
  const auto m = build_torus(2, {3.0, 5.0}, {10, 14}, 45);
  std::vector<double> w(m.mode_count());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(-0.3 * m.eigenvalues()[k]);
  for (std::size_t p : {0u, 17u, 93u})
    for (std::size_t q : {0u, 5u, 77u, 139u}) {
      double direct = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k)
        direct += w[k] * m.eigenfunction(k, p) * m.eigenfunction(k, q);
      CHECK(m.modal_sum(p, q, w) == Approx(direct).margin(1e-13));
      CHECK(m.modal_sum(m.row_representative(p), m.equivalent_column(p, q), w) ==
            Approx(direct).margin(1e-13));
      CHECK(m.modal_sum_points(m.nodes()[p], m.nodes()[q], w) == Approx(direct).margin(1e-13));
    }
}

TEST_CASE("torus geodesics wrap around") {
  const auto m = build_torus(1, {2 * kPi}, {8}, 3);
  CHECK(geodesic_distance(m, 0, 4) == Approx(kPi));
  CHECK(geodesic_distance(m, 0, 6) == Approx(kPi / 2));
  CHECK(geodesic_distance(m, 3, 3) == 0.0);
  CHECK_THROWS_AS(geodesic_distance(m, 0, 8), DomainError);
}

TEST_CASE("sphere spectrum, volume and Gram") {
  const auto m = build_sphere(1.0, 2, 6);
  const std::vector<double> expect{0, 2, 2, 2, 6, 6, 6, 6, 6};
  REQUIRE(m.mode_count() == 9);
  for (std::size_t k = 0; k < 9; ++k) CHECK(m.eigenvalues()[k] == Approx(expect[k]).margin(1e-14));
  CHECK(m.volume() == Approx(4 * kPi).epsilon(1e-8));
  CHECK(m.gram_deviation() <= 1e-8);
  for (double v : m.eigenvector(0)) CHECK(v == Approx(1.0 / std::sqrt(4 * kPi)).epsilon(1e-13));

  const auto big = build_sphere(2.0, 1, 4);
  CHECK(big.eigenvalues()[1] == Approx(0.5));

  const auto fine = build_sphere(1.0, 12, 26);
  CHECK(fine.gram_deviation() <= 1e-8);
}

TEST_CASE("sphere eigenfunctions satisfy the Laplace-Beltrami equation") {
  const auto m = build_sphere(1.0, 4, 10);
  for (std::size_t k = 0; k < m.mode_count(); ++k) {
    std::vector<double> c(m.mode_count(), 0.0);
    c[k] = 1.0;
    for (auto [th, ph] : {std::pair{0.7, 0.3}, std::pair{1.9, 4.0}, std::pair{2.6, 2.2}}) {
      const double lap = sphere_laplacian_fd(m, c, th, ph);
      const double val = m.evaluate_at(
          {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)}, c);
      CHECK(std::abs(lap + m.eigenvalues()[k] * val) <= 2e-5);
    }
  }
}

TEST_CASE("sphere capacity and transforms") {
  CHECK_THROWS_AS(build_sphere(1.0, 5, 8), CapacityError);
  CHECK_THROWS_AS(build_sphere(1.0, 0, 8), DomainError);
  const auto m = build_sphere(1.5, 6, 14);
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> c(m.mode_count());
  for (double& v : c) v = g(rng);
  const auto u = m.synthesize(c);
  const auto back = m.project(u);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(back[k] == Approx(c[k]).margin(1e-12));
  const auto grad = m.synthesize_gradient(c);
  for (std::size_t i = 0; i < u.size(); i += 11) {
    Vec3 ref{0, 0, 0};
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto gk = m.eigenfunction_gradient(k, i);
      for (int d = 0; d < 2; ++d) ref[d] += c[k] * gk[d];
    }
    for (int d = 0; d < 2; ++d) CHECK(grad[i][d] == Approx(ref[d]).margin(1e-11));
  }
  std::vector<double> w(m.mode_count());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(-0.1 * m.eigenvalues()[k]);
  for (std::size_t p : {0u, 20u, 57u})
    for (std::size_t q : {3u, 40u, 90u}) {
      double direct = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k)
        direct += w[k] * m.eigenfunction(k, p) * m.eigenfunction(k, q);
      CHECK(m.modal_sum(p, q, w) == Approx(direct).margin(1e-12));
      CHECK(m.modal_sum(m.row_representative(p), m.equivalent_column(p, q), w) ==
            Approx(direct).margin(1e-12));
    }
}

TEST_CASE("sphere gradient matches finite differences along the exponential map") {
  const auto m = build_sphere(1.3, 5, 12);
  std::vector<double> c(m.mode_count(), 0.0);
  c[7] = 1.0;
  c[20] = -0.4;
  const auto grad = m.synthesize_gradient(c);
  for (std::size_t p : {5u, 30u, 61u}) {
    for (int axis = 0; axis < 2; ++axis) {
      Vec3 dir{0, 0, 0};
      dir[axis] = 1.0;
      const double h = 1e-5;
      const double fd =
          (m.evaluate_at(m.point_along(p, dir, h), c) - m.evaluate_at(m.point_along(p, dir, -h), c)) /
          (2 * h);
      CHECK(grad[p][axis] == Approx(fd).margin(1e-7));
    }
  }
}

TEST_CASE("sphere geodesics") {
  const auto m = build_sphere(1.0, 3, 8);
  CHECK(m.point_distance({0, 0, 1}, {0, 0, -1}) == Approx(kPi));
  const auto d = m.displacement(3, 17);
  CHECK(std::hypot(d[0], d[1]) == Approx(m.distance(3, 17)));
  CHECK(m.injectivity_radius() == Approx(kPi));
  CHECK(m.curvature_bound() == Approx(1.0));
}

TEST_CASE("metric axioms and triangle inequality on random triples") {
  const auto t = build_torus(2, {2.0, 3.0}, {12, 10}, 4);
  const auto s = build_sphere(1.0, 3, 10);
  const auto me = build_mesh(icosphere_off(2), 4, 1.0);
  std::mt19937 rng(11);
  for (const SpectralManifold* m : {&t, &s, &me}) {
    std::uniform_int_distribution<std::size_t> pick(0, m->node_count() - 1);
    double violation = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = pick(rng), b = pick(rng), c = pick(rng);
      CHECK(m->distance(a, a) == 0.0);
      CHECK(m->distance(a, b) == m->distance(b, a));
      violation = std::max(violation, m->distance(a, c) - m->distance(a, b) - m->distance(b, c));
    }
    CHECK(violation <= 1e-9);
  }
}

TEST_CASE("icosphere mesh spectrum approximates the round sphere") {
  const auto m = build_mesh(icosphere_off(4), 10, 1.0);
  const std::vector<double> expect{0, 2, 2, 2, 6, 6, 6, 6, 6, 12};
  CHECK(m.eigenvalues()[0] <= 1e-10);
  for (std::size_t k = 1; k < 10; ++k)
    CHECK(std::abs(m.eigenvalues()[k] / expect[k] - 1.0) <= 0.03);
  CHECK(m.gram_deviation() <= 1e-10);
  for (double v : m.eigenvector(0)) CHECK(v == Approx(1.0 / std::sqrt(m.volume())).epsilon(1e-12));
  // Dijkstra is an upper bound for the true geodesic distance between antipodes.
  CHECK(geodesic_distance(m, 0, 3) >= kPi * 0.99);
  CHECK(geodesic_distance(m, 0, 3) <= kPi * 1.15);
}

TEST_CASE("mesh validation") {
  const std::string open_mesh = "OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n3 0 1 2\n3 1 3 2\n";
  CHECK_THROWS_AS(build_mesh(open_mesh, 2, 0.0), TopologyError);
  const std::string flat_tet = "OFF\n4 4 6\n0 0 0\n1 0 0\n2 0 0\n0 1 0\n3 0 2 1\n3 0 1 3\n3 1 2 3\n3 2 0 3\n";
  CHECK_THROWS_AS(build_mesh(flat_tet, 2, 0.0), GeometryError);
  const std::string tet = "OFF\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 1 2 3\n3 2 0 3\n";
  const auto m = build_mesh(tet, 4, 0.0);
  CHECK(m.eigenvalues()[0] <= 1e-10);
  CHECK(m.gram_deviation() <= 1e-10);
  CHECK_THROWS_AS(build_mesh(tet, 5, 0.0), CapacityError);
  CHECK_THROWS_AS(build_mesh("PLY\n", 2, 0.0), DomainError);
}

TEST_CASE("fields and digests") {
  const auto a = build_torus(1, {1.0}, {8}, 3);
  const auto b = build_torus(1, {1.0}, {8}, 3);
  CHECK(a.digest() == b.digest());
  CHECK_FALSE(a.same_as(b));
  CHECK_THROWS_AS(require_same_manifold(a, b), DomainError);
  CHECK_THROWS_AS(Field(a, {1.0, 2.0}), DomainError);
  const auto f = sample(a, [](const Vec3& x) { return x[0]; });
  CHECK(f.size() == 8);
  CHECK(f[4] == Approx(0.5));
}
