#include "fraclap/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"

namespace fraclap {

namespace {

// int exp(-e^tau - mu e^-tau + p tau) dtau over the window where the exponent
// is within 46 of its peak. Panels of width 1/2 in tau.
double substituted_integral(double mu, double p) {
  const double r_star = 0.5 * (p + std::sqrt(p * p + 4.0 * mu));
  const double t_star = std::log(r_star);
  auto phi = [&](double t) { return -std::exp(t) - mu * std::exp(-t) + p * t; };
  const double peak = phi(t_star);
  if (peak < -700.0) return 0.0;
  const double step = 0.5;
  double lo = t_star, hi = t_star;
  for (int i = 0; i < 4000 && phi(lo) > peak - 46.0; ++i) lo -= step;
  for (int i = 0; i < 4000 && phi(hi) > peak - 46.0; ++i) hi += step;
  const auto& g = numerics::gauss_legendre(16);
  double sum = 0.0;
  for (double a = lo; a < hi - 1e-12; a += step) {
    const double mid = a + 0.5 * step, half = 0.5 * step;
    double panel = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      panel += g.weights[i] * std::exp(phi(mid + half * g.nodes[i]));
    sum += half * panel;
  }
  return sum;
}

bool same_lambda(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace

double mode_profile(double lambda, double s, double z) {
  if (lambda < 0.0 || z < 0.0) throw DomainError("mode_profile: lambda and z must be >= 0");
  if (lambda == 0.0 || z == 0.0) return 1.0;
  const double mu = 0.25 * lambda * z * z;
  return substituted_integral(mu, 0.5 * s) / std::tgamma(0.5 * s);
}

double mode_profile_derivative(double lambda, double s, double z) {
  if (lambda < 0.0 || z < 0.0) throw DomainError("mode_profile: lambda and z must be >= 0");
  if (lambda == 0.0) return 0.0;
  if (z == 0.0) return s < 1.0 ? -std::numeric_limits<double>::infinity() : (s == 1.0 ? -std::sqrt(lambda) : 0.0);
  const double mu = 0.25 * lambda * z * z;
  return -0.5 * lambda * z * substituted_integral(mu, 0.5 * s - 1.0) / std::tgamma(0.5 * s);
}

std::vector<double> graded_z_grid(double z_max, double z_min, double rho) {
  if (!(z_min > 0.0) || !(rho > 1.0) || !(z_max > z_min))
    throw DomainError("graded_z_grid: need 0 < z_min < z_max and rho > 1");
  std::vector<double> z{0.0};
  for (double v = z_min;; v *= rho) {
    z.push_back(v);
    if (v >= z_max) break;
  }
  return z;
}

double mode_energy(double lambda, double s, double z_max) {
  if (lambda == 0.0) return 0.0;
  const double sq = std::sqrt(lambda);
  const double z_lo = 1e-8 / sq;
  // Below z_lo: z^{1-s}u' ~ A, u ~ 1.
  const double A = std::pow(z_lo, 1.0 - s) * mode_profile_derivative(lambda, s, z_lo);
  double e = A * A * std::pow(z_lo, s) / s + lambda * std::pow(z_lo, 2.0 - s) / (2.0 - s);
  if (z_max <= z_lo) return e;
  auto g = [&](double sigma) {
    const double z = std::exp(sigma);
    const double u = mode_profile(lambda, s, z), du = mode_profile_derivative(lambda, s, z);
    return std::pow(z, 2.0 - s) * (lambda * u * u + du * du);
  };
  const double a = std::log(z_lo), b = std::log(z_max);
  const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * (b - a))));
  return e + numerics::integrate_panels(g, a, b, panels);
}

double weighted_derivative_limit(double lambda, double s, const std::vector<double>& z_grid) {
  if (lambda == 0.0) return 0.0;
  std::vector<double> z;
  for (double v : z_grid)
    if (v > 0.0) z.push_back(v);
  std::sort(z.begin(), z.end());
  const auto below = std::count_if(z.begin(), z.end(), [](double v) { return v < 0.01; });
  if (below < 4) throw DomainError("dtn: z_grid needs at least 4 nodes below 0.01");
  z.resize(std::min<std::size_t>(6, z.size()));
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    g[i] = std::pow(z[i], 1.0 - s) * mode_profile_derivative(lambda, s, z[i]);
  std::vector<double> ex{2.0 - s};
  if (std::abs(s) > 0.1 && z.size() >= 4) ex.push_back(2.0);
  const auto c = numerics::power_fit(z, g, ex);
  const double res = numerics::power_fit_residual(z, g, ex, c);
  if (res > 1e-6 * std::abs(c[0])) {
    std::ostringstream os;
    os << "dtn: extrapolation residual " << res << " at lambda=" << lambda;
    throw AccuracyError(os.str(), res, g);
  }
  return c[0];
}

double profile_pde_residual(double lambda, double s, const std::vector<double>& z_grid) {
  if (lambda == 0.0) return 0.0;
  double worst = 0.0;
  const double delta = 1e-3;
  for (std::size_t j = 1; j + 1 < z_grid.size(); ++j) {
    const double z = z_grid[j];
    if (z <= 0.0) continue;
    const double h = delta * z;
    const double u = mode_profile(lambda, s, z);
    const double du = mode_profile_derivative(lambda, s, z);
    const double d2u =
        (mode_profile_derivative(lambda, s, z + h) - mode_profile_derivative(lambda, s, z - h)) /
        (2.0 * h);
    const double first = (1.0 - s) / z * du;
    const double scale = std::abs(d2u) + std::abs(first) + std::abs(lambda * u);
    if (scale < 1e-250) continue;
    worst = std::max(worst, std::abs(d2u + first - lambda * u) / scale);
  }
  return worst;
}

ExtensionField::ExtensionField(SpectralManifold m, FracParams params, std::vector<double> coeffs,
                               std::vector<double> z_grid)
    : m_(std::move(m)), params_(params), coeffs_(std::move(coeffs)), z_(std::move(z_grid)) {
  double amax = 0.0;
  for (double a : coeffs_) amax = std::max(amax, std::abs(a));
  table_of_mode_.assign(coeffs_.size(), -1);
  const auto& lam = m_.eigenvalues();
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    if (amax == 0.0 || std::abs(coeffs_[k]) <= 1e-14 * amax) continue;
    active_.push_back(k);
    int t = -1;
    for (std::size_t i = 0; i < table_lambda_.size(); ++i)
      if (same_lambda(table_lambda_[i], lam[k])) t = static_cast<int>(i);
    if (t < 0) {
      t = static_cast<int>(table_lambda_.size());
      table_lambda_.push_back(lam[k]);
    }
    table_of_mode_[k] = t;
  }
  values_.resize(table_lambda_.size());
  derivs_.resize(table_lambda_.size());
  for (std::size_t i = 0; i < table_lambda_.size(); ++i) {
    values_[i].resize(z_.size());
    derivs_[i].resize(z_.size());
    for (std::size_t j = 0; j < z_.size(); ++j) {
      values_[i][j] = mode_profile(table_lambda_[i], params_.s, z_[j]);
      derivs_[i][j] = z_[j] > 0.0 ? mode_profile_derivative(table_lambda_[i], params_.s, z_[j]) : 0.0;
    }
  }
}

double ExtensionField::profile(std::size_t k, std::size_t j) const {
  const int t = table_of_mode_.at(k);
  return t >= 0 ? values_[t][j] : mode_profile(m_.eigenvalues()[k], params_.s, z_.at(j));
}

double ExtensionField::profile_derivative(std::size_t k, std::size_t j) const {
  const int t = table_of_mode_.at(k);
  if (t >= 0) return derivs_[t][j];
  return z_.at(j) > 0.0 ? mode_profile_derivative(m_.eigenvalues()[k], params_.s, z_[j]) : 0.0;
}

std::vector<double> ExtensionField::scaled(std::size_t j, bool derivative) const {
  std::vector<double> c(coeffs_.size(), 0.0);
  for (std::size_t k : active_) {
    const int t = table_of_mode_[k];
    c[k] = coeffs_[k] * (derivative ? derivs_[t][j] : values_[t][j]);
  }
  return c;
}

std::vector<double> ExtensionField::slice(std::size_t j) const {
  if (j >= z_.size()) throw DomainError("ExtensionField: z index out of range");
  return m_.synthesize(scaled(j, false));
}

std::vector<Vec3> ExtensionField::slice_gradient(std::size_t j) const {
  if (j >= z_.size()) throw DomainError("ExtensionField: z index out of range");
  return m_.synthesize_gradient(scaled(j, false));
}

std::vector<double> ExtensionField::slice_dz(std::size_t j) const {
  if (j >= z_.size()) throw DomainError("ExtensionField: z index out of range");
  return m_.synthesize(scaled(j, true));
}

ExtensionField extend(const SpectralManifold& m, const Field& u, const FracParams& params,
                      std::vector<double> z_grid) {
  require_same_manifold(m, u.manifold());
  if (z_grid.empty()) throw DomainError("extend: empty z_grid");
  for (std::size_t j = 0; j < z_grid.size(); ++j) {
    if (!(z_grid[j] >= 0.0) || (j > 0 && !(z_grid[j] > z_grid[j - 1])))
      throw DomainError("extend: z_grid must be nonnegative and strictly increasing");
  }
  if (z_grid.front() != 0.0) z_grid.insert(z_grid.begin(), 0.0);
  return ExtensionField(m, params, m.project(u.values()), std::move(z_grid));
}

Field dtn(const ExtensionField& e) {
  const auto& lam = e.manifold().eigenvalues();
  std::vector<double> c(e.coefficients().size(), 0.0);
  std::vector<std::pair<double, double>> cache;
  for (std::size_t k : e.active_modes()) {
    double limit = 0.0;
    bool found = false;
    for (const auto& [l, v] : cache)
      if (same_lambda(l, lam[k])) limit = v, found = true;
    if (!found) {
      limit = weighted_derivative_limit(lam[k], e.params().s, e.z_grid());
      cache.emplace_back(lam[k], limit);
    }
    c[k] = -e.params().beta_s * limit * e.coefficients()[k];
  }
  return Field(e.manifold(), e.manifold().synthesize(c));
}

double extension_energy(const ExtensionField& e) {
  const auto& lam = e.manifold().eigenvalues();
  double lmin = std::numeric_limits<double>::infinity();
  for (std::size_t k : e.active_modes())
    if (lam[k] > 0.0) lmin = std::min(lmin, lam[k]);
  if (!std::isfinite(lmin)) return 0.0;
  const double z_max = e.z_grid().back();
  const double need = 8.0 / std::sqrt(lmin);
  if (z_max < need) {
    std::ostringstream os;
    os << "extension_energy: z_max " << z_max << " below decay scale " << need;
    throw AccuracyError(os.str(), std::exp(-2.0 * std::sqrt(lmin) * z_max), {}, need);
  }
  std::vector<std::pair<double, double>> cache;
  double total = 0.0;
  for (std::size_t k : e.active_modes()) {
    if (lam[k] == 0.0) continue;
    double ek = -1.0;
    for (const auto& [l, v] : cache)
      if (same_lambda(l, lam[k])) ek = v;
    if (ek < 0.0) {
      ek = mode_energy(lam[k], e.params().s, z_max);
      cache.emplace_back(lam[k], ek);
    }
    total += e.coefficients()[k] * e.coefficients()[k] * ek;
  }
  return 2.0 * e.params().beta_s * total;
}

}  // namespace fraclap
