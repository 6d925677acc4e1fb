#include "fraclap/monotonicity.hpp"

#include <algorithm>
#include <cmath>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"

namespace fraclap {

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

void validate_half_ball(const SpectralManifold& m, const HalfBallQuadrature& hb) {
  if (hb.center >= m.node_count()) throw DomainError("half-ball: center node out of range");
  if (hb.radii.empty()) throw DomainError("half-ball: empty radii ladder");
  const double cap = 0.25 * m.injectivity_radius();
  for (std::size_t i = 0; i < hb.radii.size(); ++i) {
    if (!(hb.radii[i] > 0.0)) throw DomainError("half-ball: radii must be positive");
    if (i > 0 && !(hb.radii[i] > hb.radii[i - 1])) throw DomainError("half-ball: radii must increase");
    if (hb.radii[i] > cap * (1.0 + 1e-12))
      throw DomainError("half-ball: radius exceeds injectivity_radius / 4");
  }
  if (hb.z_grid.size() < 3 || hb.z_grid.front() != 0.0)
    throw DomainError("half-ball: z grid must start at 0 and have at least 3 nodes");
  for (std::size_t j = 1; j < hb.z_grid.size(); ++j)
    if (!(hb.z_grid[j] > hb.z_grid[j - 1])) throw DomainError("half-ball: z grid must increase");
  if (hb.z_grid.back() < hb.radii.back()) throw DomainError("half-ball: z grid stops below the largest radius");
}

HalfBallQuadrature make_half_ball(const SpectralManifold& m, std::size_t center,
                                  std::vector<double> radii, std::vector<double> z_grid) {
  HalfBallQuadrature hb;
  hb.center = center;
  hb.radii = std::move(radii);
  if (z_grid.empty() && !hb.radii.empty()) z_grid = graded_z_grid(hb.radii.back());
  hb.z_grid = std::move(z_grid);
  validate_half_ball(m, hb);
  return hb;
}

HalfBallDensity::HalfBallDensity(const SpectralManifold& m, const Field& u,
                                 const ExtensionField& E, const EnergySpec& spec,
                                 const HalfBallQuadrature& hb)
    : m_(m), hb_(hb), s_(spec.params.s) {
  validate_half_ball(m, hb);
  require_same_manifold(m, u.manifold());
  require_same_manifold(m, E.manifold());
  if (E.z_grid() != hb.z_grid) throw DomainError("half-ball: extension and quadrature z grids differ");
  prefactor_ = std::isnan(hb.prefactor) ? 0.5 * spec.params.beta_s : hb.prefactor;
  const std::size_t N = m.node_count(), J = hb.z_grid.size();
  z_ = hb.z_grid;
  sigma_.assign(J, 0.0);
  for (std::size_t j = 1; j < J; ++j) sigma_[j] = std::log(z_[j]);

  // Each cell is split into k^n sub-cells in its frame; a sub-cell is a radial
  // slab of width ext around its distance.
  const int k = m.dim() == 3 ? 2 : 4;
  sub_begin_.assign(N + 1, 0);
  for (std::size_t p = 0; p < N; ++p) {
    const Vec3 c = m.cell_size(p);
    const Vec3 d = p == hb.center ? Vec3{0, 0, 0} : m.displacement(hb.center, p);
    const int kx = c[0] > 0 ? k : 1, ky = c[1] > 0 ? k : 1, kz = c[2] > 0 ? k : 1;
    const double wsub = 1.0 / (kx * ky * kz);
    for (int a = 0; a < kx; ++a)
      for (int b = 0; b < ky; ++b)
        for (int e = 0; e < kz; ++e) {
          const Vec3 q{d[0] + c[0] * ((a + 0.5) / kx - 0.5), d[1] + c[1] * ((b + 0.5) / ky - 0.5),
                       d[2] + c[2] * ((e + 0.5) / kz - 0.5)};
          const double r = norm3(q);
          double ext = std::max({c[0] / kx, c[1] / ky, c[2] / kz});
          if (r > 1e-12 * ext)
            ext = (std::abs(q[0]) * c[0] / kx + std::abs(q[1]) * c[1] / ky + std::abs(q[2]) * c[2] / kz) / r;
          sub_.push_back({r, ext, wsub * m.weights()[p]});
        }
    sub_begin_[p + 1] = sub_.size();
    pot_.push_back(spec.F.kind() == Potential::Kind::zero ? 0.0 : spec.F(u[p]));
  }

  g_.assign(J, {});
  std::vector<std::vector<double>> flux(J);
  numerics::parallel_for(J - 1, [&](std::size_t jj) {
    const std::size_t j = jj + 1;
    const auto grad = E.slice_gradient(j);
    const auto dz = E.slice_dz(j);
    const double w = std::pow(z_[j], 1.0 - s_);
    g_[j].resize(N);
    for (std::size_t p = 0; p < N; ++p) {
      const double g2 = grad[p][0] * grad[p][0] + grad[p][1] * grad[p][1] + grad[p][2] * grad[p][2];
      g_[j][p] = z_[j] * w * (g2 + dz[p] * dz[p]);
    }
    if (j == 1) {
      grad2_.resize(N);
      flux2_.resize(N);
      for (std::size_t p = 0; p < N; ++p) {
        grad2_[p] = grad[p][0] * grad[p][0] + grad[p][1] * grad[p][1] + grad[p][2] * grad[p][2];
        const double f = w * dz[p];
        flux2_[p] = f * f;
      }
    }
  });
  cum_.assign(J, std::vector<double>(N, 0.0));
  for (std::size_t p = 0; p < N; ++p) cum_[1][p] = column(p, z_[1]);
  for (std::size_t j = 2; j < J; ++j)
    for (std::size_t p = 0; p < N; ++p)
      cum_[j][p] = cum_[j - 1][p] + 0.5 * (sigma_[j] - sigma_[j - 1]) * (g_[j - 1][p] + g_[j][p]);
}

// int_0^Z z^{1-s}|grad U|^2 dz in the column of node p.
double HalfBallDensity::column(std::size_t p, double Z) const {
  if (Z <= 0.0) return 0.0;
  if (Z <= z_[1]) {
    // U_z ~ A z^{s-1} and grad_p U ~ const below the first node.
    return std::pow(Z, 2.0 - s_) * grad2_[p] / (2.0 - s_) + flux2_[p] * std::pow(Z, s_) / s_;
  }
  const auto it = std::upper_bound(z_.begin() + 1, z_.end(), Z);
  const std::size_t j = static_cast<std::size_t>(it - z_.begin()) - 1;  // z_j < Z <= z_{j+1}
  if (j + 1 >= z_.size()) return cum_.back()[p];
  const double sz = std::log(Z);
  const double f = (sz - sigma_[j]) / (sigma_[j + 1] - sigma_[j]);
  const double gz = g_[j][p] + f * (g_[j + 1][p] - g_[j][p]);
  return cum_[j][p] + 0.5 * (sz - sigma_[j]) * (g_[j][p] + gz);
}

PhiTerms HalfBallDensity::at(double R) const {
  if (R > 0.25 * m_.injectivity_radius() * (1.0 + 1e-12))
    throw DomainError("phi: radius exceeds injectivity_radius / 4");
  if (R > z_.back()) throw DomainError("phi: z grid stops below R");
  PhiTerms t;
  t.R = R;
  const auto& rule = numerics::gauss_legendre(8);
  for (std::size_t p = 0; p + 1 < sub_begin_.size(); ++p) {
    for (std::size_t i = sub_begin_[p]; i < sub_begin_[p + 1]; ++i) {
      const auto& q = sub_[i];
      // Distances uniform on [d - ext/2, d + ext/2]; the slab at height z is
      // inside for d < sqrt(R^2 - z^2). Average the column over d.
      const double a = q.dist - 0.5 * q.ext, b = std::min(q.dist + 0.5 * q.ext, R);
      if (b <= a) continue;
      if (pot_[p] != 0.0) t.potential += q.weight * pot_[p] * (b - a) / q.ext;
      // d = R - w^2 tames the (R - d)^{s/2} edge.
      const double w0 = std::sqrt(R - b), w1 = std::sqrt(R - a);
      double acc = 0.0;
      for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
        const double wv = 0.5 * (w0 + w1) + 0.5 * (w1 - w0) * rule.nodes[g];
        const double d = R - wv * wv;
        acc += rule.weights[g] * 2.0 * wv * column(p, std::sqrt(std::max(0.0, R * R - d * d)));
      }
      t.sobolev += q.weight * 0.5 * (w1 - w0) * acc / q.ext;
    }
  }
  t.phi = std::pow(R, s_ - m_.dim()) * (prefactor_ * t.sobolev + t.potential);
  return t;
}

PhiTerms phi(const SpectralManifold& m, const Field& u, const ExtensionField& E,
             const EnergySpec& spec, const HalfBallQuadrature& hb, double R) {
  return HalfBallDensity(m, u, E, spec, hb).at(R);
}

namespace {

struct Sweep {
  std::vector<PhiTerms> terms;
  double gibbs = 0.0;
};

Sweep evaluate_sweep(const SpectralManifold& m, const Field& u, const EnergySpec& spec,
                     const HalfBallQuadrature& hb) {
  if (hb.radii.size() < 8) throw DomainError("monotonicity: need at least 8 radii");
  validate_half_ball(m, hb);
  const auto E = extend(m, u, spec.params, hb.z_grid);
  const HalfBallDensity density(m, u, E, spec, hb);
  Sweep out;
  for (double R : hb.radii) out.terms.push_back(density.at(R));
  double umax = 0.0, pmax = 0.0;
  for (double v : u.values()) umax = std::max(umax, std::abs(v));
  for (double v : E.slice(0)) pmax = std::max(pmax, std::abs(v));
  out.gibbs = pmax - umax;
  return out;
}

MonotonicityReport assemble(const SpectralManifold& m, const Sweep& sw, double C, double tol_rel) {
  MonotonicityReport rep;
  rep.C_drift = C;
  rep.K = m.curvature_bound();
  rep.gibbs_overshoot = sw.gibbs;
  const std::size_t n = sw.terms.size();
  const double growth = C * std::sqrt(std::max(0.0, rep.K));
  for (const auto& t : sw.terms) {
    MonotonicityRecord r;
    r.R = t.R;
    r.sobolev = t.sobolev;
    r.potential = t.potential;
    r.phi = t.phi;
    r.phi_drift = t.phi * std::exp(growth * t.R);
    rep.records.push_back(r);
    rep.phi_mean += t.phi / n;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? i : i + 1;
    rep.records[i].dphi = (rep.records[b].phi - rep.records[a].phi) / (rep.records[b].R - rep.records[a].R);
  }
  rep.min_step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i)
    rep.min_step = std::min(rep.min_step, rep.records[i].phi_drift - rep.records[i - 1].phi_drift);
  rep.tol_mono = tol_rel * rep.phi_mean;
  rep.monotone = rep.min_step >= -rep.tol_mono;
  for (const auto& r : rep.records)
    if (rep.phi_mean > 0.0) rep.near_constancy = std::max(rep.near_constancy, std::abs(r.phi / rep.phi_mean - 1.0));
  return rep;
}

}  // namespace

MonotonicityReport monotonicity_sweep(const SpectralManifold& m, const Field& u,
                                      const EnergySpec& spec, const HalfBallQuadrature& hb,
                                      double C_drift, double tol_rel) {
  return assemble(m, evaluate_sweep(m, u, spec, hb), C_drift, tol_rel);
}

DriftSweep drift_sweep(const SpectralManifold& m, const Field& u, const EnergySpec& spec,
                       const HalfBallQuadrature& hb, std::vector<double> C_values,
                       double tol_rel) {
  if (C_values.empty())
    for (double c : {1.0, 2.0, 4.0, 8.0, 16.0}) C_values.push_back(c * m.dim());
  std::sort(C_values.begin(), C_values.end());
  const auto sw = evaluate_sweep(m, u, spec, hb);
  DriftSweep out;
  out.C_values = C_values;
  for (double C : C_values) {
    const bool ok = assemble(m, sw, C, tol_rel).monotone;
    out.passed.push_back(ok);
    if (ok && std::isnan(out.smallest_passing)) out.smallest_passing = C;
  }
  return out;
}

}  // namespace fraclap
