#include "fraclap/fracops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"

namespace fraclap {

using numerics::kPi;

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double max_extent(const Vec3& c) { return std::max({c[0], c[1], c[2]}); }

// Distinct values of a field, up to three (enough to tell constants,
// two-valued and general fields apart).
std::vector<double> distinct_values(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) {
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    if (out.size() > 2) break;
  }
  return out;
}

bool same_lambda(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

template <typename F>
std::vector<double> per_eigenvalue(const std::vector<double>& lam, F&& f) {
  std::vector<double> out(lam.size());
  double last = -1.0, value = 0.0;
  for (std::size_t k = 0; k < lam.size(); ++k) {
    if (k == 0 || !same_lambda(lam[k], last)) {
      value = f(lam[k]);
      last = lam[k];
    }
    out[k] = value;
  }
  return out;
}

// Fixed-order sum of per-node contributions.
double ordered_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

Field fraclap_spectral(const SpectralManifold& m, const Field& u, const FracParams& params) {
  require_same_manifold(m, u.manifold());
  if (distinct_values(u.values()).size() <= 1) return Field(m, std::vector<double>(m.node_count(), 0.0));
  auto a = m.project(u.values());
  const auto& lam = m.eigenvalues();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= lam[k] > 0.0 ? std::pow(lam[k], 0.5 * params.s) : 0.0;
  return Field(m, m.synthesize(a));
}

double bochner_multiplier(double lambda, double s, int points_per_unit) {
  if (!(s > 0.0 && s < 2.0)) throw DomainError("bochner_multiplier: s must lie in (0, 2)");
  if (lambda < 0.0) throw DomainError("bochner_multiplier: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  const double h = 0.5 * s;
  const double t_lo = 1e-2 / lambda, t_hi = 50.0 / lambda;
  // int_0^{t_lo} (e^{-lambda t} - 1) t^{-1-h} dt as a power series.
  double head = 0.0, term = 1.0;
  for (int j = 1; j < 40; ++j) {
    term *= -lambda * t_lo / j;
    head += term / (j - h);
  }
  head *= std::pow(t_lo, -h);
  const double a = std::log(t_lo), b = std::log(t_hi);
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) * points_per_unit / 16.0)));
  const double mid = numerics::integrate_panels(
      [&](double tau) {
        const double t = std::exp(tau);
        return std::expm1(-lambda * t) * std::pow(t, -h);
      },
      a, b, panels);
  // Beyond t_hi the exponential is below 2e-22 of the integrand.
  const double tail = -std::pow(t_hi, -h) / h;
  return (head + mid + tail) / std::tgamma(-h);
}

Field fraclap_bochner(const SpectralManifold& m, const Field& u, const FracParams& params) {
  require_same_manifold(m, u.manifold());
  if (distinct_values(u.values()).size() <= 1) return Field(m, std::vector<double>(m.node_count(), 0.0));
  auto a = m.project(u.values());
  const auto mult = per_eigenvalue(m.eigenvalues(), [&](double l) {
    const double fine = bochner_multiplier(l, params.s, 32);
    const double coarse = bochner_multiplier(l, params.s, 16);
    if (std::abs(fine - coarse) > 1e-10 * std::max(1.0, std::abs(fine))) {
      std::ostringstream os;
      os << "bochner: quadrature not converged at lambda=" << l;
      throw AccuracyError(os.str(), std::abs(fine - coarse), {fine, coarse});
    }
    return fine;
  });
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= mult[k];
  return Field(m, m.synthesize(a));
}

const char* to_string(PvFamily f) {
  switch (f) {
    case PvFamily::gaussian_factor: return "gaussian_factor";
    case PvFamily::ball_removal: return "ball_removal";
    case PvFamily::t_truncation: return "t_truncation";
  }
  return "?";
}

PvFamily pv_family_from_string(const std::string& name) {
  for (auto f : {PvFamily::gaussian_factor, PvFamily::ball_removal, PvFamily::t_truncation})
    if (name == to_string(f)) return f;
  throw ConfigError("unknown p.v. family '" + name + "'");
}

void PvScheme::validate() const {
  if (ladder.size() < 3) throw ConfigError("p.v. ladder needs at least 3 entries");
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    if (!(ladder[j] > 0.0)) throw ConfigError("p.v. ladder entries must be positive");
    if (j > 0 && !(ladder[j] < ladder[j - 1]))
      throw ConfigError("p.v. ladder must be strictly decreasing");
  }
  if (order < 1 || static_cast<std::size_t>(order) + 1 > ladder.size())
    throw ConfigError("p.v. extrapolation order must be in [1, ladder size - 1]");
}

PvScheme PvScheme::geometric(PvFamily family, double eps0, int rungs, int order) {
  PvScheme p;
  p.family = family;
  p.order = order;
  for (int j = 0; j < rungs; ++j) p.ladder.push_back(eps0 * std::pow(0.5, j));
  p.validate();
  return p;
}

std::vector<double> pv_correction_exponents(PvFamily family, int n, double s, int order) {
  std::vector<double> c;
  switch (family) {
    case PvFamily::gaussian_factor: c = {2 - s, 2, 4 - s, 4, 6 - s, 6}; break;
    case PvFamily::t_truncation: c = {2 - s, 4 - s, 6 - s, 8 - s}; break;
    case PvFamily::ball_removal: c = {2 - s, 4 - s, n + 2.0, 6 - s, n + 4.0}; break;
  }
  std::sort(c.begin(), c.end());
  std::vector<double> out;
  for (double e : c)
    if (out.empty() || e - out.back() > 1e-9) out.push_back(e);
  if (order > static_cast<int>(out.size())) throw ConfigError("p.v. extrapolation order too large");
  out.resize(order);
  return out;
}

double default_pv_eps0(const SpectralManifold& m) {
  const double h = std::pow(m.volume() / m.node_count(), 1.0 / m.dim());
  return 128.0 * h;
}

std::vector<double> regularized_integral(const SingularKernel& k, const Field& u, PvFamily family,
                                         double eps) {
  const auto& m = k.manifold();
  require_same_manifold(m, u.manifold());
  const auto& w = m.weights();
  const auto& v = u.values();
  const Regularization reg = family == PvFamily::gaussian_factor ? Regularization::gaussian_factor
                             : family == PvFamily::t_truncation ? Regularization::t_truncation
                                                                : Regularization::none;
  std::vector<double> out(m.node_count(), 0.0);
  numerics::parallel_for(m.node_count(), [&](std::size_t p) {
    const auto row = k.row(p, reg, eps);
    double sum = 0.0;
    for (std::size_t q = 0; q < row.size(); ++q) {
      if (q == p) continue;
      double weight = w[q];
      if (family == PvFamily::ball_removal) {
        // Fraction of q's cell outside the ball, along the radial direction.
        const Vec3 d = m.displacement(p, q);
        const double r = norm3(d);
        const Vec3 c = m.cell_size(q);
        const double ext = (std::abs(d[0]) * c[0] + std::abs(d[1]) * c[1] + std::abs(d[2]) * c[2]) / r;
        weight *= std::clamp((r - eps) / ext + 0.5, 0.0, 1.0);
        if (weight == 0.0) continue;
      }
      sum += weight * (v[p] - v[q]) * row[q];
    }
    out[p] = sum;
  });
  return out;
}

PvResult fraclap_pv(const SpectralManifold& m, const Field& u, const FracParams& params,
                    const PvScheme& scheme, const SubordinationQuadrature& quad) {
  scheme.validate();
  require_same_manifold(m, u.manifold());
  SingularKernel k(m, params, quad);
  PvResult res{Field(m, std::vector<double>(m.node_count(), 0.0)), {}, {}, {}};
  for (double eps : scheme.ladder) res.ladder_values.push_back(regularized_integral(k, u, scheme.family, eps));
  const auto ex = pv_correction_exponents(scheme.family, m.dim(), params.s, scheme.order);
  const std::size_t N = m.node_count(), J = scheme.ladder.size();
  res.fit_residual.assign(N, 0.0);
  res.last_correction.assign(N, 0.0);
  double scale = 0.0;
  for (double x : res.ladder_values.back()) scale = std::max(scale, std::abs(x));
  std::size_t worst = 0;
  std::vector<double> y(J);
  for (std::size_t p = 0; p < N; ++p) {
    for (std::size_t j = 0; j < J; ++j) y[j] = res.ladder_values[j][p];
    const auto c = numerics::power_fit(scheme.ladder, y, ex);
    res.value.values()[p] = c[0];
    res.fit_residual[p] = numerics::power_fit_residual(scheme.ladder, y, ex, c);
    res.last_correction[p] = std::abs(y.back() - c[0]);
    if (res.fit_residual[p] > res.fit_residual[worst]) worst = p;
  }
  if (scale > 0.0 && res.fit_residual[worst] > 1e-3 * scale) {
    std::vector<double> raw(J);
    for (std::size_t j = 0; j < J; ++j) raw[j] = res.ladder_values[j][worst];
    std::ostringstream os;
    os << "p.v.: eps-ladder does not stabilize at node " << worst << " (residual "
       << res.fit_residual[worst] << ")";
    throw AccuracyError(os.str(), res.fit_residual[worst], raw);
  }
  return res;
}

double seminorm_spectral(const SpectralManifold& m, const Field& u, const FracParams& params) {
  require_same_manifold(m, u.manifold());
  if (distinct_values(u.values()).size() <= 1) return 0.0;
  const auto a = m.project(u.values());
  const auto& lam = m.eigenvalues();
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (lam[k] > 0.0) sum += std::pow(lam[k], 0.5 * params.s) * a[k] * a[k];
  return 2.0 * sum;
}

namespace {

// Second antiderivative of e^{-t r^2}, less its r-independent part 1/(2t)
// handled by the caller through the signed combination.
double phi2(double r, double t) {
  const double st = std::sqrt(t);
  return 0.5 * std::sqrt(kPi) * r / st * std::erf(st * r) + std::exp(-t * r * r) / (2.0 * t);
}

struct AxisPair {
  std::array<double, 4> r;
  std::array<double, 4> sign{1.0, -1.0, -1.0, 1.0};
  double R = 0.0;

  AxisPair(double c, double ea, double eb) {
    r = {c + 0.5 * (ea + eb), c + 0.5 * (eb - ea), c - 0.5 * (eb - ea), c - 0.5 * (ea + eb)};
    for (double x : r) R = std::max(R, std::abs(x));
  }

  // int_{interval a} int_{interval b} e^{-t (x-y)^2}
  double value(double t) const {
    if (t * R * R < 1.0) {
      double sum = 0.0, fact = 1.0;
      for (int k = 0; k < 30; ++k) {
        if (k > 0) fact *= -t / k;
        double q = 0.0;
        for (int i = 0; i < 4; ++i) q += sign[i] * std::pow(r[i] * r[i], k + 1);
        const double term = fact * q / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        sum += term;
        if (k > 2 && std::abs(term) < 1e-17 * std::abs(sum)) break;
      }
      return sum;
    }
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) sum += sign[i] * phi2(r[i], t);
    return sum;
  }
};

}  // namespace

double cell_pair_integral(int n, double s, const Vec3& c, const Vec3& ea, const Vec3& eb) {
  const double a = 0.5 * (n + s);
  std::vector<AxisPair> axes;
  double R = 0.0, gap = std::numeric_limits<double>::infinity();
  bool all_overlap = true;
  for (int d = 0; d < n; ++d) {
    axes.emplace_back(c[d], ea[d], eb[d]);
    R = std::max(R, axes.back().R);
    if (std::abs(c[d]) >= 0.5 * (ea[d] + eb[d]) * (1.0 - 1e-12)) all_overlap = false;
  }
  if (all_overlap) return std::numeric_limits<double>::infinity();
  // Large-t behaviour per axis: A1 t^{-1/2} + A0 t^{-1}.
  std::vector<double> poly{1.0};  // coefficients in x = t^{-1/2}
  for (const auto& ax : axes) {
    double A1 = 0.0, A0 = 0.0;
    for (int i = 0; i < 4; ++i) {
      if (std::abs(ax.r[i]) <= 1e-9 * ax.R) {
        A0 += 0.5 * ax.sign[i];
      } else {
        A1 += 0.5 * std::sqrt(kPi) * ax.sign[i] * std::abs(ax.r[i]);
        gap = std::min(gap, std::abs(ax.r[i]));
      }
    }
    // Disjoint intervals cancel exactly in A1; drop the rounding residue.
    if (std::abs(A1) < 1e-10 * ax.R) A1 = 0.0;
    std::vector<double> next(poly.size() + 2, 0.0);
    for (std::size_t k = 0; k < poly.size(); ++k) {
      next[k + 1] += A1 * poly[k];
      next[k + 2] += A0 * poly[k];
    }
    poly = next;
  }
  const double t_lo = 1e-7 / (R * R);
  const double t_hi = 40.0 / (gap * gap);
  double area = 1.0;
  for (int d = 0; d < n; ++d) area *= ea[d] * eb[d];
  double head = area * std::pow(t_lo, a) / a;
  double tail = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    if (poly[k] == 0.0) continue;
    const double p = a - 0.5 * k;  // t^{p-1}
    if (p >= 0.0) return std::numeric_limits<double>::infinity();
    tail += poly[k] * std::pow(t_hi, p) / (-p);
  }
  const double lo = std::log(t_lo), hi = std::log(t_hi);
  const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * (hi - lo))));
  const double mid = numerics::integrate_panels(
      [&](double tau) {
        const double t = std::exp(tau);
        double v = std::pow(t, a);
        for (const auto& ax : axes) v *= ax.value(t);
        return v;
      },
      lo, hi, panels);
  return (head + mid + tail) / std::tgamma(a);
}

namespace {

double smooth_seminorm(const SpectralManifold& m, const Field& u, const FracParams& params,
                       const SingularKernel& k) {
  const int n = m.dim();
  const double s = params.s, alpha = params.alpha_ns;
  const auto grad = m.synthesize_gradient(m.project(u.values()));
  const auto& w = m.weights();
  const auto& v = u.values();
  // int_0^rc r^{1-s} chi(r) dr with chi = 1 below rc/2.
  auto radial = [&](double rc) {
    const double inner = std::pow(0.5 * rc, 2.0 - s) / (2.0 - s);
    const double outer = numerics::integrate_panels(
        [&](double r) { return std::pow(r, 1.0 - s) * numerics::smooth_cutoff(2.0 * r / rc - 1.0); },
        0.5 * rc, rc, 4);
    return inner + outer;
  };
  const double sphere_area = numerics::unit_sphere_area(n);
  std::vector<double> part(m.node_count(), 0.0);
  numerics::parallel_for(m.node_count(), [&](std::size_t p) {
    const auto row = k.row(p);
    const double rc = 4.0 * max_extent(m.cell_size(p));
    const Vec3& g = grad[p];
    double sum = 0.0;
    for (std::size_t q = 0; q < row.size(); ++q) {
      if (q == p) continue;
      const double du = v[p] - v[q];
      double term = du * du * row[q];
      const double d = m.distance(p, q);
      if (d < rc) {
        const Vec3 z = m.displacement(p, q);
        const double r = norm3(z);
        const double gz = g[0] * z[0] + g[1] * z[1] + g[2] * z[2];
        term -= gz * gz * alpha * std::pow(r, -n - s) * numerics::smooth_cutoff(2.0 * r / rc - 1.0);
      }
      sum += w[q] * term;
    }
    const double g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    sum += alpha * g2 * sphere_area / n * radial(rc);
    part[p] = w[p] * sum;
  });
  return ordered_sum(part);
}

double two_valued_seminorm(const SpectralManifold& m, const Field& u, const FracParams& params,
                           const SingularKernel& k, double jump) {
  const int n = m.dim();
  const double s = params.s, alpha = params.alpha_ns;
  const auto& w = m.weights();
  const auto& v = u.values();
  std::mutex mutex;
  std::map<std::pair<std::size_t, std::size_t>, double> cell_cache;
  std::vector<double> part(m.node_count(), 0.0);
  numerics::parallel_for(m.node_count(), [&](std::size_t p) {
    const auto row = k.row(p);
    const Vec3 cp = m.cell_size(p);
    const std::size_t rep = m.row_representative(p);
    double sum = 0.0;
    for (std::size_t q = 0; q < row.size(); ++q) {
      if (v[q] == v[p]) continue;
      const Vec3 cq = m.cell_size(q);
      const double rc = 6.0 * std::max(max_extent(cp), max_extent(cq));
      const double d = m.distance(p, q);
      if (d >= rc) {
        sum += w[p] * w[q] * row[q];
        continue;
      }
      const Vec3 z = m.displacement(p, q);
      const double r = norm3(z);
      const auto key = std::make_pair(rep, m.equivalent_column(p, q));
      double avg = 0.0;
      bool found = false;
      {
        std::lock_guard lock(mutex);
        const auto it = cell_cache.find(key);
        if (it != cell_cache.end()) avg = it->second, found = true;
      }
      if (!found) {
        avg = cell_pair_integral(n, s, z, cp, cq);
        std::lock_guard lock(mutex);
        cell_cache.emplace(key, avg);
      }
      if (!std::isfinite(avg)) {
        if (s >= 1.0) {
          sum = std::numeric_limits<double>::infinity();
          break;
        }
        // Overlapping cell boxes (curved grids): point value only.
        sum += w[p] * w[q] * row[q];
        continue;
      }
      // Euclidean part averaged over the cell pair, smooth remainder pointwise.
      const double euclid = alpha * std::pow(r, -n - s);
      double cells = 1.0;
      for (int dd = 0; dd < n; ++dd) cells *= cp[dd] * cq[dd];
      sum += w[p] * w[q] * (row[q] - euclid) + alpha * avg * (w[p] * w[q] / cells);
    }
    part[p] = sum;
  });
  return jump * jump * ordered_sum(part);
}

}  // namespace

double seminorm_double_integral(const SpectralManifold& m, const Field& u,
                                const FracParams& params, const SubordinationQuadrature& quad) {
  require_same_manifold(m, u.manifold());
  const auto values = distinct_values(u.values());
  if (values.size() <= 1) return 0.0;
  SingularKernel k(m, params, quad);
  if (values.size() == 2) return two_valued_seminorm(m, u, params, k, values[0] - values[1]);
  return smooth_seminorm(m, u, params, k);
}

double perimeter_s(const SpectralManifold& m, const Field& E, const FracParams& params,
                   const SubordinationQuadrature& quad) {
  if (!(params.s > 0.0 && params.s < 1.0)) throw DomainError("perimeter_s: s must lie in (0, 1)");
  for (double x : E.values())
    if (x != 0.0 && x != 1.0) throw DomainError("perimeter_s: E must be a 0/1 indicator");
  return seminorm_double_integral(m, E, params, quad);
}

double classical_perimeter(const SpectralManifold& m, const Field& E) {
  require_same_manifold(m, E.manifold());
  if (m.kind() != ManifoldKind::torus)
    throw DomainError("classical_perimeter: face counting needs a torus grid");
  const int n = m.dim();
  const Vec3 h = m.cell_size(0);
  std::map<std::array<long, 3>, std::size_t> index;
  std::array<long, 3> N{1, 1, 1};
  for (std::size_t p = 0; p < m.node_count(); ++p) {
    std::array<long, 3> i{0, 0, 0};
    for (int d = 0; d < n; ++d) {
      i[d] = std::lround(m.nodes()[p][d] / h[d]);
      N[d] = std::max(N[d], i[d] + 1);
    }
    index.emplace(i, p);
  }
  const auto& v = E.values();
  const auto vals = distinct_values(v);
  if (vals.size() > 2) throw DomainError("classical_perimeter: field must be two-valued");
  if (vals.size() < 2) return 0.0;
  const double jump = std::abs(vals[0] - vals[1]);
  double per = 0.0;
  for (const auto& [i, p] : index) {
    for (int d = 0; d < n; ++d) {
      auto j = i;
      j[d] = (j[d] + 1) % N[d];
      const std::size_t q = index.at(j);
      double face = 1.0;
      for (int e = 0; e < n; ++e)
        if (e != d) face *= h[e];
      per += std::abs(v[p] - v[q]) / jump * face;
    }
  }
  return per;
}

PerimeterLimitReport perimeter_limit_report(const SpectralManifold& m,
                                            const std::vector<Field>& shapes,
                                            const std::vector<double>& s_ladder) {
  PerimeterLimitReport rep;
  std::vector<double> ladder = s_ladder;
  std::sort(ladder.begin(), ladder.end());
  rep.s_values = ladder;
  std::vector<double> per(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) per[i] = classical_perimeter(m, shapes[i]);
  std::vector<double> prev(shapes.size(), std::numeric_limits<double>::quiet_NaN());
  bool up = true, down = true;
  for (double s : ladder) {
    const auto params = constants(m.dim(), s);
    const auto quad = default_quadrature(m, params);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      PerimeterLimitRow row;
      row.shape = i;
      row.s = s;
      row.per_s = perimeter_s(m, shapes[i], params, quad);
      row.per = per[i];
      if (per[i] > 0.0) {
        row.ratio = (1.0 - s) * row.per_s / per[i];
        lo = std::min(lo, row.ratio);
        hi = std::max(hi, row.ratio);
        mean += row.ratio;
        ++count;
        if (row.ratio < prev[i]) up = false;
        if (row.ratio > prev[i]) down = false;
        prev[i] = row.ratio;
      } else {
        row.ratio = std::numeric_limits<double>::quiet_NaN();
      }
      rep.rows.push_back(row);
    }
    rep.spread.push_back(count > 0 ? (hi - lo) / (mean / count) : 0.0);
  }
  rep.trend = up ? 1 : (down ? -1 : 0);
  return rep;
}

Potential Potential::zero() { return Potential(); }

Potential Potential::double_well() {
  Potential p;
  p.kind_ = Kind::double_well;
  return p;
}

Potential Potential::tabulated(std::vector<double> x, std::vector<double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("tabulated F: need >= 2 (x, F) pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] >= 0.0)) throw ConfigError("tabulated F: values must be nonnegative");
    if (i > 0 && !(x[i] > x[i - 1])) throw ConfigError("tabulated F: abscissae must increase");
  }
  Potential p;
  p.kind_ = Kind::tabulated;
  p.x_ = std::move(x);
  p.y_ = std::move(y);
  return p;
}

double Potential::operator()(double v) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::double_well: {
      const double a = 1.0 - v * v;
      return a * a;
    }
    case Kind::tabulated: {
      if (v <= x_.front()) return y_.front();
      if (v >= x_.back()) return y_.back();
      const auto it = std::upper_bound(x_.begin(), x_.end(), v);
      const std::size_t i = static_cast<std::size_t>(it - x_.begin());
      const double f = (v - x_[i - 1]) / (x_[i] - x_[i - 1]);
      return (1.0 - f) * y_[i - 1] + f * y_[i];
    }
  }
  return 0.0;
}

double energy(const SpectralManifold& m, const Field& u, const EnergySpec& spec,
              const SubordinationQuadrature& quad) {
  require_same_manifold(m, u.manifold());
  const double semi = spec.route == SeminormRoute::spectral
                          ? seminorm_spectral(m, u, spec.params)
                          : seminorm_double_integral(m, u, spec.params, quad);
  double pot = 0.0;
  if (spec.F.kind() != Potential::Kind::zero)
    for (std::size_t p = 0; p < u.size(); ++p) pot += m.weights()[p] * spec.F(u[p]);
  return semi + pot;
}

Vec3 flow(const SpectralManifold& m, const VectorField& X, const Vec3& x, double t) {
  if (m.kind() == ManifoldKind::mesh) throw DomainError("flow: no closed-form chart on a mesh");
  const bool sphere = m.kind() == ManifoldKind::sphere;
  const double radius = sphere ? norm3(x) : 0.0;
  auto field = [&](const Vec3& y) {
    Vec3 f = X(y);
    if (sphere) {
      const double dot = f[0] * y[0] + f[1] * y[1] + f[2] * y[2];
      if (std::abs(dot) > 1e-6 * std::max(1.0, norm3(f)) * norm3(y))
        throw DomainError("flow: vector field is not tangent to the sphere");
    } else {
      for (int d = m.dim(); d < 3; ++d) f[d] = 0.0;
    }
    return f;
  };
  const int steps = std::max(16, static_cast<int>(std::ceil(std::abs(t) * 200.0)));
  const double dt = t / steps;
  Vec3 y = x;
  auto axpy = [](const Vec3& a, double c, const Vec3& b) {
    return Vec3{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
  };
  for (int i = 0; i < steps; ++i) {
    const Vec3 k1 = field(y);
    const Vec3 k2 = field(axpy(y, 0.5 * dt, k1));
    const Vec3 k3 = field(axpy(y, 0.5 * dt, k2));
    const Vec3 k4 = field(axpy(y, dt, k3));
    for (int d = 0; d < 3; ++d) y[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    if (sphere) {
      const double r = norm3(y);
      for (double& c : y) c *= radius / r;
    }
  }
  return y;
}

FlowReport energy_along_flow(const SpectralManifold& m, const ScalarFunction& u,
                             const VectorField& X, const EnergySpec& spec,
                             const std::vector<double>& t_ladder,
                             const SubordinationQuadrature& quad) {
  std::vector<double> ts = t_ladder;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (std::find(ts.begin(), ts.end(), 0.0) == ts.end())
    throw ConfigError("energy_along_flow: t ladder must contain 0");
  double pair = 0.0;
  for (double t : ts)
    if (t > 0.0 && std::find(ts.begin(), ts.end(), -t) != ts.end() && (pair == 0.0 || t < pair)) pair = t;
  if (pair == 0.0) throw ConfigError("energy_along_flow: t ladder needs a symmetric pair");
  FlowReport rep;
  for (double t : ts) {
    std::vector<double> v(m.node_count());
    numerics::parallel_for(v.size(), [&](std::size_t p) { v[p] = u(flow(m, X, m.nodes()[p], -t)); });
    rep.rows.push_back({t, energy(m, Field(m, std::move(v)), spec, quad)});
  }
  auto at = [&](double t) {
    for (const auto& r : rep.rows)
      if (r.t == t) return r.energy;
    return 0.0;
  };
  rep.derivative = (at(pair) - at(-pair)) / (2.0 * pair);
  for (std::size_t i = 1; i + 1 < rep.rows.size(); ++i) {
    const auto &a = rep.rows[i - 1], &b = rep.rows[i], &c = rep.rows[i + 1];
    const double d2 = 2.0 * ((c.energy - b.energy) / (c.t - b.t) - (b.energy - a.energy) / (b.t - a.t)) /
                      (c.t - a.t);
    rep.max_second_difference = std::max(rep.max_second_difference, std::abs(d2));
  }
  return rep;
}

}  // namespace fraclap
