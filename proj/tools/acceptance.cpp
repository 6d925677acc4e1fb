// Acceptance checks. One line per criterion:
//   [PASS|FAIL] <id> <name>: <measured> (tol <tolerance>) [<seconds>s]
// Usage: fraclap_acceptance [id ...]   (no ids: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "fraclap/errors.hpp"
#include "fraclap/extension.hpp"
#include "fraclap/fracops.hpp"
#include "fraclap/heat.hpp"
#include "fraclap/kernel.hpp"
#include "fraclap/monotonicity.hpp"
#include "fraclap/numerics.hpp"

using namespace fraclap;

namespace {

constexpr double kPi = numerics::kPi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char b[64];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

std::string sci(double v) { return fmt("%.3g", v); }

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

double sup_abs(const std::vector<double>& a) {
  double r = 0.0;
  for (double v : a) r = std::max(r, std::abs(v));
  return r;
}

double lambda_min(const SpectralManifold& m) {
  double l = 1e300;
  for (double v : m.eigenvalues())
    if (v > 1e-12) l = std::min(l, v);
  return l;
}

std::size_t nearest_node(const SpectralManifold& m, const Vec3& x) {
  std::size_t best = 0;
  double bd = 1e300;
  for (std::size_t p = 0; p < m.node_count(); ++p) {
    const double d = m.point_distance(m.nodes()[p], x);
    if (d < bd) {
      bd = d;
      best = p;
    }
  }
  return best;
}

Outcome constants_consistency() {
  double worst = 0.0;
  int pairs = 0;
  for (int n = 1; n <= 4; ++n)
    for (double s : {0.1, 0.5, 0.9, 1.3, 1.9}) {
      worst = std::max(worst, std::abs(constants(n, s).alpha_ns / alpha_abs_gamma_form(n, s) - 1.0));
      ++pairs;
    }
  double beta = 0.0;
  for (int n = 1; n <= 3; ++n) beta = std::max(beta, std::abs(constants(n, 1.0).beta_s - 1.0));
  return {pairs == 20 && worst <= 1e-12 && beta <= 1e-14,
          std::to_string(pairs) + " pairs, max alpha rel diff " + sci(worst) + " (tol 1e-12); |beta_1 - 1| " +
              sci(beta) + " (tol 1e-14)"};
}

Outcome subordination() {
  double worst = 0.0;
  int cases = 0;
  for (int n : {1, 2})
    for (double s : {0.3, 1.0, 1.7})
      for (double d : {0.1, 1.0, 10.0}) {
        worst = std::max(worst, subordination_self_test(n, s, d));
        ++cases;
      }
  return {worst <= 1e-8, std::to_string(cases) + " cases, max rel err " + sci(worst) + " (tol 1e-8)"};
}

Outcome euclidean_recovery() {
  const auto m = build_torus(1, {20.0}, {1000}, 999);
  Outcome o;
  double worst = 0.0;
  int bad = 0, total = 0;
  std::string first_bad;
  for (double s : {0.3, 0.6, 0.9}) {
    const auto p = constants(1, s);
    SingularKernel k(m, p);
    for (int i = 0; i < 10; ++i) {
      const double x = 0.05 * std::pow(10.0, i / 9.0);
      const double dev = std::abs(k.evaluate_points({0, 0, 0}, {x, 0, 0}).value * std::pow(x, 1 + s) / p.alpha_ns - 1.0);
      worst = std::max(worst, dev);
      ++total;
      if (dev > 5e-2) {
        if (!bad) first_bad = "s=" + fmt("%.1f", s) + " |x|=" + fmt("%.3f", x) + " dev " + sci(dev);
        ++bad;
      }
    }
  }
  o.pass = bad == 0;
  o.detail = "max |K|x|^{1+s}/alpha - 1| " + sci(worst) + " (tol 5e-2), " + std::to_string(bad) + "/" +
             std::to_string(total) + " samples over tol";
  if (bad) o.detail += "; first: " + first_bad + " (periodic images on L=20)";
  return o;
}

struct CircleSetup {
  SpectralManifold m = build_torus(1, {2 * kPi}, {2048}, 2047);
  Field u = sample(m, [](const Vec3& x) { return std::cos(x[0]) + 0.3 * std::cos(3 * x[0]); });
};

Outcome four_routes() {
  CircleSetup c;
  double boch = 0.0, pv = 0.0, dn = 0.0;
  for (double s : {0.4, 1.0, 1.6}) {
    const auto p = constants(1, s);
    for (int k = 1; k <= 64; ++k) {
      const double l = double(k) * k;
      boch = std::max(boch, std::abs(bochner_multiplier(l, s) - std::pow(l, 0.5 * s)) / std::pow(l, 0.5 * s));
    }
    const auto spec = fraclap_spectral(c.m, c.u, p).values();
    const auto q = default_quadrature(c.m, p);
    const auto v = fraclap_pv(c.m, c.u, p, PvScheme::geometric(PvFamily::gaussian_factor, default_pv_eps0(c.m)), q);
    pv = std::max(pv, sup_diff(v.value.values(), spec));
    // Fit nodes must sit well inside 1/sqrt(lambda) for the top mode.
    const double zmin = std::min(1e-4, 1e-2 / std::sqrt(c.m.eigenvalues().back()));
    const auto d = dtn(extend(c.m, c.u, p, graded_z_grid(8.0 / std::sqrt(lambda_min(c.m)), zmin))).values();
    dn = std::max(dn, sup_diff(d, spec));
  }
  return {boch <= 1e-8 && pv <= 1e-2 && dn <= 1e-3,
          "Bochner multiplier rel " + sci(boch) + " (tol 1e-8); p.v. sup " + sci(pv) + " (tol 1e-2); DtN sup " +
              sci(dn) + " (tol 1e-3)"};
}

Outcome pv_families() {
  CircleSetup c;
  double worst = 0.0;
  for (double s : {0.4, 1.0, 1.6}) {
    const auto p = constants(1, s);
    const auto q = default_quadrature(c.m, p);
    std::vector<std::vector<double>> lim;
    for (auto f : {PvFamily::gaussian_factor, PvFamily::ball_removal, PvFamily::t_truncation})
      lim.push_back(fraclap_pv(c.m, c.u, p, PvScheme::geometric(f, default_pv_eps0(c.m)), q).value.values());
    const double scale = sup_abs(fraclap_spectral(c.m, c.u, p).values());
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) worst = std::max(worst, sup_diff(lim[a], lim[b]) / scale);
  }
  return {worst <= 1e-3, "max pairwise sup diff / sup|spectral| " + sci(worst) + " (tol 1e-3)"};
}

Outcome seminorm_triple() {
  const auto t2 = build_torus(2, {2 * kPi, 2 * kPi}, {32, 32}, 31 * 31);
  const auto s2 = build_sphere(1.0, 24, 50);
  const auto ut = sample(t2, [](const Vec3& x) {
    return std::sin(x[0]) * std::cos(x[1]) + 0.5 * std::cos(2 * x[1]) + 0.2 * std::sin(x[0] + x[1]);
  });
  const auto us = sample(s2, [](const Vec3& x) { return std::exp(x[0]) + x[1] * x[2]; });
  double ext = 0.0, di = 0.0;
  for (double s : {0.5, 1.0, 1.5})
    for (int w = 0; w < 2; ++w) {
      const auto& m = w ? s2 : t2;
      const auto& u = w ? us : ut;
      const auto p = constants(2, s);
      const double sp = seminorm_spectral(m, u, p);
      const double e = extension_energy(extend(m, u, p, graded_z_grid(8.0 / std::sqrt(lambda_min(m)) * 1.01)));
      const double d = seminorm_double_integral(m, u, p, default_quadrature(m, p));
      ext = std::max(ext, std::abs(e / sp - 1.0));
      di = std::max(di, std::abs(d / sp - 1.0));
    }
  return {ext <= 1e-3 && di <= 2e-2,
          "extension rel " + sci(ext) + " (tol 1e-3); double integral rel " + sci(di) + " (tol 2e-2)"};
}

Outcome extension_identities() {
  double u0 = 0.0, ez = 0.0, en = 0.0, res = 0.0;
  const auto grid = graded_z_grid(8.0);
  for (double s : {0.4, 1.0, 1.6})
    for (double z : grid) u0 = std::max(u0, std::abs(mode_profile(0.0, s, z) - 1.0));
  for (int i = 0; i <= 800; ++i) {
    const double z = 0.01 * i;
    ez = std::max(ez, std::abs(mode_profile(1.0, 1.0, z) - std::exp(-z)));
  }
  for (double l : {1.0, 4.0, 9.0})
    for (double s : {0.4, 1.0, 1.6}) {
      const double target = std::pow(l, 0.5 * s);
      en = std::max(en, std::abs(constants(1, s).beta_s * mode_energy(l, s, 40.0 / std::sqrt(l)) - target) / target);
      res = std::max(res, profile_pde_residual(l, s, grid));
    }
  return {u0 <= 1e-10 && ez <= 1e-8 && en <= 1e-4 && res <= 1e-4,
          "|u_0 - 1| " + sci(u0) + " (tol 1e-10); |u - e^-z| " + sci(ez) + " (tol 1e-8); energy rel " + sci(en) +
              " (tol 1e-4); PDE residual " + sci(res) + " (tol 1e-4)"};
}

Outcome heat_properties() {
  const auto torus = build_torus(2, {2.0, 3.0}, {12, 16}, 150);
  const auto sphere = build_sphere(1.0, 10, 22);
  const auto mesh = build_mesh(icosphere_off(2), 30, 1.0);
  bool symmetric = true;
  double mass = 0.0;
  for (const SpectralManifold* m : {&torus, &sphere, &mesh}) {
    HeatEvaluator h(*m);
    for (double t : {h.t_gauss(), 3 * h.t_gauss(), 0.7})
      for (std::size_t p : {0u, 5u, 33u}) {
        double acc = 0.0;
        for (std::size_t q = 0; q < m->node_count(); ++q) {
          const double v = heat_kernel(h, p, q, t);
          symmetric = symmetric && v == heat_kernel(h, q, p, t);
          acc += m->weights()[q] * v;
        }
        mass = std::max(mass, std::abs(acc - 1.0));
      }
  }
  HeatEvaluator hs(sphere);
  const auto u = sample(sphere, [](const Vec3& x) { return std::exp(x[0]) + x[1] * x[2]; });
  const double comp = sup_diff(heat_apply(hs, heat_apply(hs, u, 0.2), 0.15).values(), heat_apply(hs, u, 0.35).values());

  const auto c1 = build_torus(1, {2 * kPi}, {256}, 255);
  const auto c2 = build_torus(2, {2.0, 3.5}, {24, 40}, 897);
  double oracle = 0.0;
  for (const SpectralManifold* m : {&c1, &c2}) {
    HeatEvaluator h(*m);
    const auto& L = std::get<TorusDescriptor>(m->descriptor()).lengths;
    for (double t : {0.05, 0.3, 2.0}) {
      if (!h.reliable(t) || h.truncation_bound(t) > 1e-8) continue;
      for (std::size_t q = 0; q < m->node_count(); q += m->node_count() / 7)
        oracle = std::max(oracle, std::abs(heat_kernel(h, 0, q, t) -
                                           heat_kernel_torus_images(L, m->nodes()[0], m->nodes()[q], t,
                                                                    required_image_radius(L, t))));
    }
  }
  return {symmetric && mass <= 1e-10 && comp <= 1e-12 && oracle <= 1e-8,
          std::string("symmetry ") + (symmetric ? "exact" : "BROKEN") + "; mass " + sci(mass) +
              " (tol 1e-10); composition " + sci(comp) + " (tol 1e-12); eigensum vs images " + sci(oracle) +
              " (tol 1e-8)"};
}

Outcome scaling_law() {
  double worst = 0.0;
  const auto base = build_torus(2, {3.0, 4.0}, {16, 20}, 285);
  for (double s : {0.5, 0.8, 1.5}) {
    const auto p = constants(2, s);
    SingularKernel k(base, p);
    for (double r : {0.5, 2.0}) {
      SingularKernel kr(build_torus(2, {3.0 * r, 4.0 * r}, {16, 20}, 285), p);
      for (std::size_t q : {1u, 21u, 170u, 319u})
        worst = std::max(worst, std::abs(kr.evaluate(0, q).value / (std::pow(r, -(2 + s)) * k.evaluate(0, q).value) - 1.0));
    }
  }
  return {worst <= 1e-6, "max rel deviation from r^{-(n+s)} K " + sci(worst) + " (tol 1e-6)"};
}

// Exact Per_s of an arc of length a on a circle of length L (1D, periodized).
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

Outcome perimeter_properties() {
  const double L = 20.0;
  const int N = 2000;
  const auto m = build_torus(1, {L}, {N}, N - 1);
  const double h = L / N;
  const auto E = sample(m, [&](const Vec3& x) { return x[0] < 5.0 - 0.5 * h ? 1.0 : 0.0; });
  const auto p = constants(1, 0.5);
  const auto quad = default_quadrature(m, p);
  const double per = perimeter_s(m, E, p, quad);
  Field pm = E;
  for (auto& v : pm.values()) v = 2 * v - 1;
  const double quarter = std::abs(0.25 * seminorm_double_integral(m, pm, p, quad) - per) / per;
  const double oracle = std::abs(per / arc_perimeter_oracle(5.0, L, 0.5) - 1.0);

  const auto t2 = build_torus(2, {2 * kPi, 2 * kPi}, {64, 64}, 63 * 63);
  auto strip = [&](double w) { return sample(t2, [w](const Vec3& x) { return std::abs(x[0] - kPi) < w / 2 ? 1.0 : 0.0; }); };
  const auto rep = perimeter_limit_report(t2, {strip(kPi), strip(kPi / 2)}, {0.95});
  const double spread = rep.spread.back();
  return {quarter <= 1e-12 && oracle <= 1e-2 && spread <= 5e-2,
          "1/4-identity rel " + sci(quarter) + " (tol 1e-12); 1D oracle rel " + sci(oracle) +
              " (tol 1e-2); ratio spread at s=0.95 " + sci(spread) + " (tol 5e-2; ratios " +
              fmt("%.4f", rep.rows[0].ratio) + ", " + fmt("%.4f", rep.rows[1].ratio) + ")"};
}

Outcome monotonicity_check() {
  const double L = 2 * kPi;
  const auto m = build_torus(2, {L, L}, {128, 128}, 127 * 127);
  const auto u = sample(m, [&](const Vec3& x) { return x[0] >= L / 4 && x[0] < 3 * L / 4 ? 1.0 : -1.0; });
  std::vector<double> radii;
  for (int i = 0; i < 8; ++i) radii.push_back(L * (0.05 + 0.075 * i / 7.0));
  const auto hb = make_half_ball(m, nearest_node(m, {L / 4, L / 2, 0}), radii);
  EnergySpec spec;
  spec.params = constants(2, 0.5);
  const auto rep = monotonicity_sweep(m, u, spec, hb, 1.0);
  auto fine = hb;
  fine.z_grid = graded_z_grid(radii.back(), 1e-4, std::sqrt(1.15));
  const auto rf = monotonicity_sweep(m, u, spec, fine, 1.0);
  double refine = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i)
    refine = std::max(refine, std::abs(rf.records[i].phi / rep.records[i].phi - 1.0));
  const double step = rep.min_step / rep.phi_mean;
  return {rep.monotone && rep.near_constancy <= 5e-2 && refine <= 1e-2,
          "min step / mean " + sci(step) + " (tol -1e-3); near-constancy " + sci(rep.near_constancy) +
              " (tol 5e-2); z-refinement " + sci(refine) + " (tol 1e-2); R in [0.05, 0.125] L, 8 radii"};
}

Outcome defect_boundedness() {
  const auto m = build_sphere(1.0, 40, 82);
  const auto p = constants(2, 0.6);
  const auto quad = default_quadrature(m, p);
  std::vector<double> radii;
  for (double r = 0.3; r >= 0.0099; r /= 1.6) radii.push_back(r);
  const std::vector<Vec3> dirs{{1, 0, 0}, {0, 1, 0}};
  const auto rows = asymptotic_defect_report(m, 100, dirs, radii, p, quad);
  const std::size_t R = radii.size();
  bool ok = true;
  double worst_growth = -1e300, band_at = 0.0, last = 0.0;
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    // Least-squares slope of the normalized defect against -log d over the
    // three smallest radii, as the change across them.
    double sx = 0, sy = 0, sxx = 0, sxy = 0, band = 0;
    for (std::size_t i = R - 3; i < R; ++i) {
      const auto& r = rows[d * R + i];
      const double x = -std::log(r.radius), y = r.normalized_defect;
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      band = std::max(band, r.error_bound);
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    const double growth = slope * (std::log(rows[d * R + R - 3].radius) - std::log(rows[d * R + R - 1].radius));
    if (growth > band) ok = false;
    if (growth - band > worst_growth - band_at) {
      worst_growth = growth;
      band_at = band;
    }
    last = std::max(last, rows[d * R + R - 1].normalized_defect);
  }
  return {ok, "growth over last three samples " + sci(worst_growth) + " (noise band " + sci(band_at) +
                  "); defect at d=" + fmt("%.4f", rows[R - 1].radius) + " " + sci(last)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "constant consistency", constants_consistency},
      {2, "subordination self-test", subordination},
      {3, "Euclidean kernel recovery", euclidean_recovery},
      {4, "four-route fractional Laplacian", four_routes},
      {5, "p.v. family independence", pv_families},
      {6, "seminorm triple equality", seminorm_triple},
      {7, "extension identities", extension_identities},
      {8, "heat semigroup properties", heat_properties},
      {9, "scaling law", scaling_law},
      {10, "perimeter properties", perimeter_properties},
      {11, "monotonicity", monotonicity_check},
      {12, "asymptotic defect boundedness", defect_boundedness},
  };
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const auto& c : all) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
