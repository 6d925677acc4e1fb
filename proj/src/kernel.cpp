#include "fraclap/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"

namespace fraclap {

namespace {

using numerics::kPi;
using numerics::upper_gamma;

// Gamma(a, D/4T) vanishes to double precision past this argument.
constexpr double kGammaCutoff = 740.0;

double gaussian_piece(double a, double D, double t0, double T) {
  // int_{t0}^{T} e^{-D/4t} t^{-1-a} dt
  if (t0 >= T) return 0.0;
  if (D == 0.0) return (std::pow(t0, -a) - std::pow(T, -a)) / a;
  const double x = 0.25 * D;
  const double hi = x / T;
  if (hi > kGammaCutoff) return 0.0;
  const double lo_part = t0 > 0.0 ? upper_gamma(a, x / t0) : 0.0;
  return std::pow(x, -a) * (upper_gamma(a, hi) - lo_part);
}

// int_{t0}^inf e^{-lambda t} t^{-1-s/2} dt in closed form.
double modal_tail(double lambda, double s, double t0) {
  const double h = 0.5 * s;
  if (lambda <= 0.0) return std::pow(t0, -h) / h;
  const double x = lambda * t0;
  if (x > kGammaCutoff) return 0.0;
  // Gamma(-h, x) = (x^{-h} e^{-x} - Gamma(1-h, x)) / h
  return std::pow(lambda, h) * (std::pow(x, -h) * std::exp(-x) - upper_gamma(1.0 - h, x)) / h;
}

double sphere_zonal_reference(double d, double t, int l_max) {
  const double x = std::cos(d);
  double p0 = 1.0, p1 = x;
  double sum = 1.0 / (4.0 * kPi) + 3.0 / (4.0 * kPi) * std::exp(-2.0 * t) * x;
  for (int l = 2; l <= l_max; ++l) {
    const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
    p0 = p1;
    p1 = p2;
    const double w = std::exp(-l * (l + 1.0) * t);
    if (w < 1e-300) break;
    sum += (2.0 * l + 1.0) / (4.0 * kPi) * w * p2;
  }
  return sum;
}

SurrogateDefect fit_surrogate_defect() {
  SurrogateDefect fit{0.0, 0.2};
  for (int it = 0; it < 30; ++it) {
    const double t = std::pow(10.0, -4.0 + it * (std::log10(0.2) + 4.0) / 29.0);
    for (int id = 0; id <= 60; ++id) {
      const double d = 1.5 * id / 60.0;
      const double envelope = std::sqrt(t) / t * std::exp(-fit.c * d * d / t);
      if (envelope < 1e-8) continue;
      const double gauss = std::exp(-d * d / (4.0 * t)) / (4.0 * kPi * t);
      const double ref = sphere_zonal_reference(d, t, 600);
      fit.C = std::max(fit.C, std::abs(ref - gauss) / envelope);
    }
  }
  fit.C *= 1.25;
  return fit;
}

}  // namespace

FracParams constants(int n, double s) {
  if (n < 1) throw DomainError("constants: n must be >= 1");
  if (!(s > 0.0 && s < 2.0)) throw DomainError("constants: s must lie in (0, 2)");
  FracParams p;
  p.n = n;
  p.s = s;
  const double g1 = std::tgamma(1.0 - 0.5 * s);
  p.alpha_ns = s * std::pow(2.0, s - 1.0) * std::tgamma(0.5 * (n + s)) /
               (std::pow(kPi, 0.5 * n) * g1);
  p.beta_s = std::pow(2.0, s - 1.0) * std::tgamma(0.5 * s) / g1;
  p.c_s = 0.5 * s / g1;
  return p;
}

double alpha_abs_gamma_form(int n, double s) {
  if (n < 1 || !(s > 0.0 && s < 2.0)) throw DomainError("alpha_abs_gamma_form: invalid (n, s)");
  return std::pow(2.0, s) * std::tgamma(0.5 * (n + s)) /
         (std::pow(kPi, 0.5 * n) * std::abs(std::tgamma(-0.5 * s)));
}

std::string SubordinationQuadrature::digest() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "t_split=%.17g;t_max=%.17g;ppu=%d", t_split, t_max,
                points_per_unit);
  return buf;
}

SubordinationQuadrature default_quadrature(const SpectralManifold& m, const FracParams&) {
  const auto& lam = m.eigenvalues();
  if (lam.size() < 2 || !(lam.back() > 0.0))
    throw CapacityError("default_quadrature: at least one nonconstant mode is required");
  double lam1 = 0.0;
  for (double l : lam)
    if (l > 1e-12 * lam.back()) {
      lam1 = l;
      break;
    }
  SubordinationQuadrature q;
  q.t_split = std::log(1e10) / lam.back();
  q.t_max = q.t_split + std::log(1e12 * static_cast<double>(lam.size())) / lam1;
  return q;
}

double log_panel_integral(const std::function<double(double)>& g, double a, double b,
                          int points_per_unit) {
  if (!(a > 0.0) || !(b > a)) return 0.0;
  const double ta = std::log(a), tb = std::log(b);
  const int panels = std::max(1, static_cast<int>(std::ceil(tb - ta)));
  return numerics::integrate_panels([&g](double tau) { return g(std::exp(tau)); }, ta, tb, panels,
                                    points_per_unit);
}

double subordination_self_test(int n, double s, double d, int points_per_unit) {
  const FracParams p = constants(n, s);
  const double a = 0.5 * (n + s);
  const double x = 0.25 * d * d;
  // Left of x/800 the Gaussian factor is below e^{-800}; right of
  // x*1e8 the factor is expanded to second order and integrated exactly.
  const double lo = x / 800.0, hi = x * 1e8;
  const double body = log_panel_integral(
      [&](double t) { return std::exp(-x / t) * std::pow(t, -a); }, lo, hi, points_per_unit);
  const double tail = std::pow(hi, -a) / a - x * std::pow(hi, -a - 1.0) / (a + 1.0) +
                      0.5 * x * x * std::pow(hi, -a - 2.0) / (a + 2.0);
  const double value = p.c_s * std::pow(4.0 * kPi, -0.5 * n) * (body + tail);
  const double exact = p.alpha_ns / std::pow(d, n + s);
  return std::abs(value / exact - 1.0);
}

const SurrogateDefect& fitted_surrogate_defect() {
  static const SurrogateDefect fit = fit_surrogate_defect();
  return fit;
}

SingularKernel::SingularKernel(SpectralManifold m, FracParams params, SubordinationQuadrature quad)
    : m_(std::move(m)), params_(params), quad_(quad) {
  if (params_.n != m_.dim()) throw DomainError("SingularKernel: params dimension differs from manifold");
  if (!(quad_.t_split > 0.0)) throw DomainError("SingularKernel: t_split must be positive");
}

SingularKernel::SingularKernel(SpectralManifold m, FracParams params)
    : SingularKernel(m, params, default_quadrature(m, params)) {}

const std::vector<double>& SingularKernel::modal_weights(Regularization reg, double eps) const {
  const auto key = std::make_pair(static_cast<int>(reg), reg == Regularization::none ? 0.0 : eps);
  {
    std::lock_guard lock(mutex_);
    const auto it = weights_.find(key);
    if (it != weights_.end()) return *it->second;
  }
  const auto& lam = m_.eigenvalues();
  const double s = params_.s, h = 0.5 * s, T = quad_.t_split;
  auto w = std::make_shared<std::vector<double>>(lam.size(), 0.0);
  double last_lambda = -1.0, last_value = 0.0;
  for (std::size_t k = 0; k < lam.size(); ++k) {
    const double l = lam[k];
    if (l == last_lambda) {
      (*w)[k] = last_value;
      continue;
    }
    double v = 0.0;
    switch (reg) {
      case Regularization::none:
        v = modal_tail(l, s, T);
        break;
      case Regularization::t_truncation:
        v = modal_tail(l, s, std::max(T, 0.25 * eps * eps));
        break;
      case Regularization::gaussian_factor: {
        const double x = 0.25 * eps * eps;
        if (l <= 1e-12 * lam.back()) {
          v = std::pow(x, -h) * numerics::lower_gamma(h, x / T);
        } else if (l * T <= kGammaCutoff) {
          const double upper = std::min(quad_.t_max, T + 50.0 / l);
          v = log_panel_integral(
              [&](double t) { return std::exp(-l * t - x / t) * std::pow(t, -h); }, T,
              std::max(upper, T * (1.0 + 1e-12)), quad_.points_per_unit);
        }
        break;
      }
    }
    (*w)[k] = params_.c_s * v;
    last_lambda = l;
    last_value = (*w)[k];
  }
  std::lock_guard lock(mutex_);
  return *weights_.emplace(key, std::move(w)).first->second;
}

KernelValue SingularKernel::assemble(const Vec3& delta, double d, double modal, Regularization reg,
                                     double eps) const {
  const int n = params_.n;
  const double a = 0.5 * (n + params_.s);
  const double T = quad_.t_split;
  const double pre = params_.c_s * std::pow(4.0 * kPi, -0.5 * n);
  const double e2 = reg == Regularization::gaussian_factor ? eps * eps : 0.0;
  const double t0 = reg == Regularization::t_truncation ? 0.25 * eps * eps : 0.0;

  double small = 0.0, bound = 0.0;
  if (m_.kind() == ManifoldKind::torus) {
    const auto& lengths = std::get<TorusDescriptor>(m_.descriptor()).lengths;
    const double reach2 = 4.0 * kGammaCutoff * T;
    std::array<std::vector<double>, 3> offsets;
    for (int k = 0; k < 3; ++k) {
      if (k >= n) {
        offsets[k] = {0.0};
        continue;
      }
      const double L = lengths[k];
      const int span = static_cast<int>(std::ceil(std::sqrt(reach2) / L)) + 1;
      for (int mm = -span; mm <= span; ++mm) {
        const double r = delta[k] + mm * L;
        if (r * r <= reach2) offsets[k].push_back(r * r);
      }
    }
    for (double r0 : offsets[0])
      for (double r1 : offsets[1])
        for (double r2 : offsets[2]) {
          const double D = r0 + r1 + r2 + e2;
          if (D == 0.0 && t0 == 0.0) continue;
          small += pre * gaussian_piece(a, D, t0, T);
        }
    const double value = small + modal;
    bound = 1e-10 * std::abs(value);
    return {value, bound};
  }

  const double D = d * d + e2;
  small = pre * gaussian_piece(a, D, t0, T);
  const auto& fit = fitted_surrogate_defect();
  const double b = a - 0.5;
  const double preC = params_.c_s * fit.C * std::sqrt(m_.curvature_bound());
  if (b > 0.0) {
    const double cD = fit.c * D;
    if (cD == 0.0) {
      if (t0 > 0.0) bound = preC * (std::pow(t0, -b) - std::pow(T, -b)) / b;
    } else if (t0 < T && cD / T <= kGammaCutoff) {
      bound = preC * std::pow(cD, -b) *
              (upper_gamma(b, cD / T) - (t0 > 0.0 ? upper_gamma(b, cD / t0) : 0.0));
    }
  }
  const double value = small + modal;
  if (bound > max_relative_defect * std::abs(value))
    throw AccuracyError("kernel: surrogate defect bound exceeds tolerance; increase the mode count",
                        bound / std::abs(value));
  return {value, bound};
}

KernelValue SingularKernel::evaluate(std::size_t p, std::size_t q, Regularization reg,
                                     double eps) const {
  if (p >= m_.node_count() || q >= m_.node_count())
    throw DomainError("kernel: node index out of range");
  if (reg != Regularization::none && !(eps > 0.0))
    throw DomainError("kernel: eps must be positive");
  if (reg == Regularization::none && p == q)
    throw SingularityError("kernel: K_s is singular on the diagonal");
  if (q < p) std::swap(p, q);
  const auto& w = modal_weights(reg, eps);
  const double modal = m_.modal_sum(p, q, w);
  const Vec3 delta = m_.kind() == ManifoldKind::torus ? m_.displacement(p, q) : Vec3{0, 0, 0};
  return assemble(delta, m_.distance(p, q), modal, reg, eps);
}

KernelValue SingularKernel::evaluate_points(const Vec3& x, const Vec3& y, Regularization reg,
                                            double eps) const {
  if (reg != Regularization::none && !(eps > 0.0))
    throw DomainError("kernel: eps must be positive");
  const double d = m_.point_distance(x, y);
  if (reg == Regularization::none && d == 0.0)
    throw SingularityError("kernel: K_s is singular on the diagonal");
  const auto& w = modal_weights(reg, eps);
  const double modal = m_.modal_sum_points(x, y, w);
  Vec3 delta{0, 0, 0};
  if (m_.kind() == ManifoldKind::torus) {
    const auto& lengths = std::get<TorusDescriptor>(m_.descriptor()).lengths;
    for (int k = 0; k < m_.dim(); ++k) {
      double r = std::fmod(y[k] - x[k], lengths[k]);
      if (r < -0.5 * lengths[k]) r += lengths[k];
      if (r >= 0.5 * lengths[k]) r -= lengths[k];
      delta[k] = r;
    }
  }
  return assemble(delta, d, modal, reg, eps);
}

std::shared_ptr<const std::vector<double>> SingularKernel::representative_row(
    std::size_t rep, Regularization reg, double eps) const {
  const auto key = std::make_tuple(rep, static_cast<int>(reg), reg == Regularization::none ? 0.0 : eps);
  {
    std::lock_guard lock(mutex_);
    const auto it = rows_.find(key);
    if (it != rows_.end()) return it->second;
  }
  auto values = std::make_shared<std::vector<double>>(m_.node_count(), 0.0);
  numerics::parallel_for(values->size(), [&](std::size_t q) {
    if (q == rep && reg == Regularization::none) return;
    (*values)[q] = evaluate(rep, q, reg, eps).value;
  });
  std::lock_guard lock(mutex_);
  return rows_.emplace(key, std::move(values)).first->second;
}

std::vector<double> SingularKernel::row(std::size_t p, Regularization reg, double eps) const {
  if (p >= m_.node_count()) throw DomainError("kernel: node index out of range");
  const std::size_t rep = m_.row_representative(p);
  const auto base = representative_row(rep, reg, eps);
  if (rep == p) return *base;
  std::vector<double> out(base->size());
  for (std::size_t q = 0; q < out.size(); ++q) out[q] = (*base)[m_.equivalent_column(p, q)];
  return out;
}

double ks(const SpectralManifold& m, std::size_t p, std::size_t q, const FracParams& params,
          const SubordinationQuadrature& quad) {
  return SingularKernel(m, params, quad).evaluate(p, q).value;
}

double ks_eps(const SpectralManifold& m, std::size_t p, std::size_t q, double eps,
              const FracParams& params, const SubordinationQuadrature& quad) {
  return SingularKernel(m, params, quad).evaluate(p, q, Regularization::gaussian_factor, eps).value;
}

std::vector<DefectRow> asymptotic_defect_report(const SpectralManifold& m, std::size_t p,
                                                const std::vector<Vec3>& directions,
                                                const std::vector<double>& radii,
                                                const FracParams& params,
                                                const SubordinationQuadrature& quad) {
  const double cap = 0.25 * m.injectivity_radius();
  for (double r : radii)
    if (!(r > 0.0) || r > cap)
      throw DomainError("asymptotic_defect_report: radius " + std::to_string(r) +
                        " outside (0, injectivity_radius/4]");
  SingularKernel kernel(m, params, quad);
  const double power = params.n + params.s;
  std::vector<DefectRow> rows;
  for (std::size_t di = 0; di < directions.size(); ++di)
    for (double r : radii) {
      const Vec3 y = m.point_along(p, directions[di], r);
      const double d = m.point_distance(m.nodes()[p], y);
      const KernelValue kv = kernel.evaluate_points(m.nodes()[p], y);
      DefectRow row;
      row.direction = di;
      row.radius = d;
      row.kernel = kv.value;
      row.model = params.alpha_ns / std::pow(d, power);
      row.normalized_defect = std::abs(kv.value - row.model) * std::pow(d, power - 1.0);
      row.error_bound = kv.error_bound * std::pow(d, power - 1.0);
      rows.push_back(row);
    }
  return rows;
}

}  // namespace fraclap
