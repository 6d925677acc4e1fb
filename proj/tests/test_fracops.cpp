#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "fraclap/errors.hpp"
#include "fraclap/fracops.hpp"

using namespace fraclap;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

double sup_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Per_s of the arc [0, a] on a circle of length L: 2 int_E int_{E^c} K with
// the image-sum kernel, by second antiderivatives of |r|^{-1-s}, plus an
// integral estimate of the images beyond |m| = M.
double arc_perimeter_oracle(double a, double L, double s) {
  const auto p = constants(1, s);
  auto G = [&](double r) { return std::pow(std::abs(r), 1.0 - s) / (-s * (1.0 - s)); };
  const int M = 2000;
  double sum = 0.0;
  for (int m = -M; m <= M; ++m) {
    const double b = a + m * L, c = L + m * L;
    sum += G(c) - G(c - a) - G(b) + G(b - a);
  }
  sum += 2.0 * a * (L - a) * std::pow(L, -1.0 - s) * std::pow(M + 0.5, -s) / s;
  return 2.0 * p.alpha_ns * sum;
}

// int_0^h int_c^{c+h} |x-y|^{-1-s}, closed form.
double interval_pair(double c, double h, double s) {
  auto G = [&](double r) { return std::pow(std::abs(r), 1.0 - s) / (-s * (1.0 - s)); };
  return G(c + h) - 2.0 * G(c) + G(c - h);
}

}  // namespace

TEST_CASE("spectral fractional Laplacian") {
  const auto m = build_torus(1, {2 * kPi}, {64}, 63);
  const auto c1 = sample(m, [](const Vec3& x) { return std::cos(x[0]); });
  const auto c2 = sample(m, [](const Vec3& x) { return std::cos(2 * x[0]); });
  for (double s : {0.3, 1.0, 1.7}) CHECK(sup_diff(fraclap_spectral(m, c1, constants(1, s)), c1) <= 1e-11);
  const auto out = fraclap_spectral(m, c2, constants(1, 1.0));
  for (std::size_t i = 0; i < m.node_count(); ++i) CHECK(out[i] == Approx(2 * c2[i]).margin(1e-11));
  const Field k(m, std::vector<double>(64, 3.0));
  const auto zero = fraclap_spectral(m, k, constants(1, 0.5));
  for (double v : zero.values()) CHECK(v == 0.0);
}

TEST_CASE("Bochner multipliers") {
  CHECK(std::abs(bochner_multiplier(1.0, 1.0) - 1.0) <= 1e-8);
  CHECK(std::abs(bochner_multiplier(4.0, 0.5) - std::sqrt(2.0)) <= 1e-8);
  for (double s : {0.1, 0.7, 1.3, 1.95})
    for (double l : {1e-3, 0.5, 2.0, 37.0, 1e4})
      CHECK(bochner_multiplier(l, s) == Approx(std::pow(l, 0.5 * s)).epsilon(1e-11));
  const auto m = build_sphere(1.0, 12, 26);
  const auto u = sample(m, [](const Vec3& x) { return std::exp(x[2]) * x[0]; });
  for (double s : {0.4, 1.0, 1.6}) {
    const auto p = constants(2, s);
    CHECK(sup_diff(fraclap_bochner(m, u, p), fraclap_spectral(m, u, p)) <= 1e-8);
  }
  const Field c(m, std::vector<double>(m.node_count(), -2.0));
  const auto zero = fraclap_bochner(m, c, constants(2, 0.4));
  for (double v : zero.values()) CHECK(v == 0.0);
}

TEST_CASE("p.v. route and family independence") {
  const auto m = build_torus(1, {2 * kPi}, {4096}, 4095);
  const auto u = sample(m, [](const Vec3& x) { return std::cos(x[0]) + 0.3 * std::cos(3 * x[0]); });
  for (double s : {0.4, 1.0, 1.6}) {
    const auto p = constants(1, s);
    const auto quad = default_quadrature(m, p);
    const auto ref = fraclap_spectral(m, u, p);
    std::vector<Field> out;
    for (auto f : {PvFamily::gaussian_factor, PvFamily::ball_removal, PvFamily::t_truncation}) {
      const auto r = fraclap_pv(m, u, p, PvScheme::geometric(f, default_pv_eps0(m)), quad);
      INFO("s=" << s << " family " << to_string(f));
      CHECK(sup_diff(r.value, ref) <= 1e-2);
      out.push_back(r.value);
    }
    double scale = 0.0;
    for (double v : ref.values()) scale = std::max(scale, std::abs(v));
    INFO("s=" << s);
    CHECK(sup_diff(out[0], out[1]) <= 1e-3 * scale);
    CHECK(sup_diff(out[0], out[2]) <= 1e-3 * scale);
    CHECK(sup_diff(out[1], out[2]) <= 1e-3 * scale);
  }
}

TEST_CASE("p.v. scheme validation and constants") {
  CHECK_THROWS_AS(PvScheme::geometric(PvFamily::ball_removal, 0.1, 2), ConfigError);
  PvScheme bad{PvFamily::t_truncation, {0.1, 0.2, 0.05}, 1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(pv_family_from_string("ball_removal") == PvFamily::ball_removal);
  CHECK_THROWS_AS(pv_family_from_string("nope"), ConfigError);
  const auto m = build_torus(1, {2 * kPi}, {256}, 255);
  const auto p = constants(1, 0.8);
  SingularKernel k(m, p);
  const Field c(m, std::vector<double>(256, 1.25));
  for (auto f : {PvFamily::gaussian_factor, PvFamily::ball_removal, PvFamily::t_truncation})
    for (double eps : {0.3, 0.1})
      for (double v : regularized_integral(k, c, f, eps)) CHECK(v == 0.0);
}

TEST_CASE("seminorms: spectral oracle, double integral, Parseval") {
  const auto m = build_torus(1, {2 * kPi}, {256}, 255);
  const auto u = sample(m, [](const Vec3& x) { return std::cos(x[0]); });
  for (double s : {0.3, 1.0, 1.7}) CHECK(seminorm_spectral(m, u, constants(1, s)) == Approx(2 * kPi).epsilon(1e-13));
  const auto p = constants(1, 1.0);
  const auto quad = default_quadrature(m, p);
  const double di = seminorm_double_integral(m, u, p, quad);
  CHECK(std::abs(di / (2 * kPi) - 1.0) <= 2e-2);
  Field u2 = u;
  for (auto& v : u2.values()) v *= 2.0;
  CHECK(seminorm_double_integral(m, u2, p, quad) == Approx(4 * di).epsilon(1e-12));
  const Field c(m, std::vector<double>(256, 0.5));
  CHECK(seminorm_double_integral(m, c, p, quad) == 0.0);
  CHECK(seminorm_spectral(m, c, p) == 0.0);

  const auto sph = build_sphere(1.0, 10, 22);
  for (std::size_t k : {1u, 5u, 17u}) {
    const Field phi(sph, sph.eigenvector(k));
    CHECK(seminorm_spectral(sph, phi, constants(2, 0.6)) ==
          Approx(2 * std::pow(sph.eigenvalues()[k], 0.3)).epsilon(1e-12));
  }
  const auto g = sample(sph, [](const Vec3& x) { return std::sin(2 * x[0]) + x[1] * x[2]; });
  for (double s : {0.5, 1.5}) {
    const auto ps = constants(2, s);
    const auto lap = fraclap_spectral(sph, g, ps);
    double inner = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) inner += sph.weights()[i] * g[i] * lap[i];
    CHECK(std::abs(seminorm_spectral(sph, g, ps) - 2 * inner) <= 1e-12 * seminorm_spectral(sph, g, ps));
    CHECK(seminorm_spectral(sph, g, ps) > 0.0);
  }
}

TEST_CASE("cell-pair integrals against closed forms") {
  const double h = 0.1;
  for (double s : {0.2, 0.5, 0.9})
    for (int j : {1, 2, 5}) {
      const double got = cell_pair_integral(1, s, {j * h, 0, 0}, {h, 0, 0}, {h, 0, 0});
      CHECK(got == Approx(interval_pair(j * h, h, s)).epsilon(1e-9));
    }
  // Unequal cells, separated: compare with tensor Gauss quadrature.
  const Vec3 c{0.25, -0.1, 0}, ea{0.1, 0.08, 0}, eb{0.05, 0.12, 0};
  const double s = 0.7;
  double ref = 0.0;
  const auto& g = [] {
    std::vector<double> x, w;
    const double r = std::sqrt(3.0 / 5.0);
    x = {-r, 0, r};
    w = {5.0 / 9, 8.0 / 9, 5.0 / 9};
    return std::make_pair(x, w);
  }();
  const int sub = 12;
  auto pts = [&](double centre, double ext) {
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < sub; ++i) {
      const double a = centre - ext / 2 + ext * i / sub, hw = ext / (2 * sub);
      for (int k = 0; k < 3; ++k) out.emplace_back(a + hw + hw * g.first[k], hw * g.second[k]);
    }
    return out;
  };
  const auto ax = pts(0, ea[0]), ay = pts(0, ea[1]), bx = pts(c[0], eb[0]), by = pts(c[1], eb[1]);
  for (const auto& [x1, w1] : ax)
    for (const auto& [y1, v1] : ay)
      for (const auto& [x2, w2] : bx)
        for (const auto& [y2, v2] : by)
          ref += w1 * v1 * w2 * v2 * std::pow((x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2), -0.5 * (2 + s));
  CHECK(cell_pair_integral(2, s, c, ea, eb) == Approx(ref).epsilon(1e-6));
  CHECK(std::isinf(cell_pair_integral(2, 0.5, {0.01, 0, 0}, {0.1, 0.1, 0}, {0.1, 0.1, 0})));
}

TEST_CASE("fractional perimeter") {
  const double L = 20.0;
  const int N = 2000;
  const auto m = build_torus(1, {L}, {N}, 1999);
  const double h = L / N;
  const auto E = sample(m, [&](const Vec3& x) { return x[0] < 5.0 - 0.5 * h ? 1.0 : 0.0; });
  const auto p = constants(1, 0.5);
  const auto quad = default_quadrature(m, p);
  const double per = perimeter_s(m, E, p, quad);
  CHECK(std::abs(per / arc_perimeter_oracle(5.0, L, 0.5) - 1.0) <= 1e-2);

  Field pm = E;
  for (auto& v : pm.values()) v = 2 * v - 1;
  CHECK(std::abs(0.25 * seminorm_double_integral(m, pm, p, quad) - per) <= 1e-12 * per);
  CHECK(perimeter_s(m, Field(m, std::vector<double>(N, 0.0)), p, quad) == 0.0);
  CHECK(perimeter_s(m, Field(m, std::vector<double>(N, 1.0)), p, quad) == 0.0);
  CHECK_THROWS_AS(perimeter_s(m, pm, p, quad), DomainError);
  CHECK_THROWS_AS(perimeter_s(m, E, constants(1, 1.2), quad), DomainError);
}

TEST_CASE("classical perimeter and the s -> 1 report") {
  const auto m = build_torus(2, {2 * kPi, 2 * kPi}, {64, 64}, 63 * 63);
  const auto strip = [&](double w) {
    return sample(m, [w](const Vec3& x) { return std::abs(x[0] - kPi) < w / 2 ? 1.0 : 0.0; });
  };
  CHECK(classical_perimeter(m, strip(kPi)) == Approx(2 * 2 * kPi).epsilon(1e-12));
  const auto rep = perimeter_limit_report(m, {strip(kPi), strip(kPi / 2)}, {0.9, 0.5, 0.7});
  REQUIRE(rep.rows.size() == 6);
  CHECK(rep.s_values.front() == 0.5);
  for (const auto& r : rep.rows) CHECK(r.ratio > 0.0);
  CHECK(rep.trend != 0);
  CHECK(rep.spread.back() < 0.1);
}

TEST_CASE("energies and potentials") {
  const auto m = build_torus(1, {2 * kPi}, {128}, 127);
  const auto p = constants(1, 0.5);
  const auto quad = default_quadrature(m, p);
  const auto u = sample(m, [](const Vec3& x) { return std::sin(x[0]); });
  EnergySpec spec{Potential::zero(), p, SeminormRoute::spectral};
  CHECK(energy(m, u, spec, quad) == seminorm_spectral(m, u, p));
  spec.F = Potential::double_well();
  const Field c(m, std::vector<double>(128, 0.5));
  CHECK(energy(m, c, spec, quad) == Approx(2 * kPi * 0.5625).epsilon(1e-13));

  const auto pm = sample(m, [](const Vec3& x) { return x[0] < 2.0 ? 1.0 : -1.0; });
  Field chi = pm;
  for (auto& v : chi.values()) v = v > 0 ? 1.0 : 0.0;
  EnergySpec di{Potential::double_well(), p, SeminormRoute::double_integral};
  CHECK(energy(m, pm, di, quad) == Approx(4 * perimeter_s(m, chi, p, quad)).epsilon(1e-12));

  const auto tab = Potential::tabulated({-1, 0, 1}, {0, 1, 0});
  CHECK(tab(0.5) == Approx(0.5));
  CHECK(tab(3.0) == 0.0);
  CHECK_THROWS_AS(Potential::tabulated({0, 1}, {1, -1}), ConfigError);
  CHECK_THROWS_AS(Potential::tabulated({1, 0}, {1, 1}), ConfigError);
}

TEST_CASE("energy along flows") {
  const auto m = build_torus(1, {2 * kPi}, {256}, 255);
  const auto p = constants(1, 0.6);
  const auto quad = default_quadrature(m, p);
  const EnergySpec spec{Potential::double_well(), p, SeminormRoute::spectral};
  const std::vector<double> ts{-0.1, -0.05, 0.0, 0.05, 0.1};
  auto translate = [](const Vec3&) { return Vec3{1.0, 0, 0}; };
  auto compress = [](const Vec3& x) { return Vec3{-std::sin(x[0]), 0, 0}; };
  // Smoothed strip centred at 0, symmetric under x -> -x.
  auto strip = [](const Vec3& x) { return std::tanh(4.0 * (std::cos(x[0]) - 0.2)); };

  const auto flat = energy_along_flow(m, [](const Vec3&) { return 1.0; }, translate, spec, ts, quad);
  CHECK(flat.derivative == 0.0);
  const auto tr = energy_along_flow(m, strip, translate, spec, ts, quad);
  CHECK(std::abs(tr.derivative) <= 1e-6);
  const auto cp = energy_along_flow(m, strip, compress, spec, ts, quad);
  CHECK(std::abs(cp.derivative) > 1e-3);
  CHECK(cp.max_second_difference < 1e3);
  // Sign against direct re-evaluation of the compressed strip.
  const auto moved = sample(m, [&](const Vec3& x) { return strip(flow(m, compress, x, -0.02)); });
  const double direct = (energy(m, moved, spec, quad) - energy(m, sample(m, strip), spec, quad)) / 0.02;
  CHECK((direct > 0) == (cp.derivative > 0));

  const auto sph = build_sphere(1.0, 6, 14);
  CHECK_THROWS_AS(flow(sph, [](const Vec3&) { return Vec3{0, 0, 1}; }, {0, 0, 1}, 0.1), DomainError);
  const Vec3 y = flow(sph, [](const Vec3& x) { return Vec3{-x[1], x[0], 0}; }, {1, 0, 0}, kPi / 2);
  CHECK(y[1] == Approx(1.0).margin(1e-9));
}
