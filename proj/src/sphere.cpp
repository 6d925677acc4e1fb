#include <algorithm>
#include <cmath>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"
#include "manifold_impl.hpp"

namespace fraclap {

namespace {

using numerics::kPi;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Normalized associated Legendre values Q[l][m] (and d/dtheta) at mu = cos(theta),
// scaled so that 2 pi * integral of Q_l^m squared over mu equals 1.
void legendre_table(int l_max, double mu, std::vector<double>& q, std::vector<double>& dq) {
  const int w = l_max + 1;
  q.assign(static_cast<std::size_t>(w) * w, 0.0);
  dq.assign(q.size(), 0.0);
  const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  auto at = [w](int l, int m) { return static_cast<std::size_t>(l) * w + m; };
  q[at(0, 0)] = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 1; m <= l_max; ++m)
    q[at(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * q[at(m - 1, m - 1)];
  for (int m = 0; m < l_max; ++m) q[at(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * mu * q[at(m, m)];
  for (int m = 0; m <= l_max; ++m)
    for (int l = m + 2; l <= l_max; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (1.0 * l * l - 1.0 * m * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - 1.0 * m * m) /
                                 (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      q[at(l, m)] = a * (mu * q[at(l - 1, m)] - b * q[at(l - 2, m)]);
    }
  if (st == 0.0) return;
  for (int l = 0; l <= l_max; ++l)
    for (int m = 0; m <= l; ++m) {
      double rhs = -l * mu * q[at(l, m)];
      if (l > m)
        rhs += std::sqrt((2.0 * l + 1.0) * (l - m) * (l + m) / (2.0 * l - 1.0)) * q[at(l - 1, m)];
      dq[at(l, m)] = -rhs / st;
    }
}

double longitude_factor(int m, double phi) {
  if (m == 0) return 1.0;
  return std::sqrt(2.0) * (m > 0 ? std::cos(m * phi) : std::sin(-m * phi));
}

double longitude_derivative(int m, double phi) {
  if (m == 0) return 0.0;
  const double a = std::abs(m);
  return std::sqrt(2.0) * a * (m > 0 ? -std::sin(a * phi) : std::cos(a * phi));
}

double legendre_p(int l_max, double x, std::vector<double>& p) {
  p.assign(l_max + 1, 0.0);
  p[0] = 1.0;
  if (l_max >= 1) p[1] = x;
  for (int l = 2; l <= l_max; ++l) p[l] = ((2.0 * l - 1.0) * x * p[l - 1] - (l - 1.0) * p[l - 2]) / l;
  return p[l_max];
}

class SphereImpl final : public detail::ManifoldImpl {
 public:
  SphereImpl(double radius, int l_max, int npb, int bands)
      : r_(radius), l_max_(l_max), npb_(npb), bands_(bands) {
    dim = 2;
    kind = ManifoldKind::sphere;
    descriptor = SphereDescriptor{radius, l_max, bands, npb};
    curvature_bound = 1.0 / (radius * radius);
    injectivity_radius = kPi * radius;

    const auto& rule = numerics::gauss_legendre(bands);
    mu_ = rule.nodes;
    band_weight_ = rule.weights;
    for (int b = 0; b < bands; ++b) sin_theta_.push_back(std::sqrt(1.0 - mu_[b] * mu_[b]));
    for (int j = 0; j < npb; ++j) phi_.push_back(2.0 * kPi * j / npb);

    nodes.reserve(static_cast<std::size_t>(bands) * npb);
    for (int b = 0; b < bands; ++b)
      for (int j = 0; j < npb; ++j) {
        nodes.push_back({r_ * sin_theta_[b] * std::cos(phi_[j]),
                         r_ * sin_theta_[b] * std::sin(phi_[j]), r_ * mu_[b]});
        weights.push_back(r_ * r_ * band_weight_[b] * 2.0 * kPi / npb);
      }
    volume = 0.0;
    for (double w : weights) volume += w;

    for (int l = 0; l <= l_max; ++l)
      for (int m = -l; m <= l; ++m) {
        mode_l_.push_back(l);
        mode_m_.push_back(m);
        eigenvalues.push_back(l * (l + 1.0) / (r_ * r_));
      }
    const std::size_t K = mode_l_.size();
    band_value_.assign(K * bands, 0.0);
    band_dtheta_.assign(K * bands, 0.0);
    std::vector<double> q, dq;
    for (int b = 0; b < bands; ++b) {
      legendre_table(l_max, mu_[b], q, dq);
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t at = static_cast<std::size_t>(mode_l_[k]) * (l_max + 1) +
                               std::abs(mode_m_[k]);
        band_value_[k * bands + b] = q[at];
        band_dtheta_[k * bands + b] = dq[at];
      }
    }
    const int mw = 2 * l_max + 1;
    lon_.assign(static_cast<std::size_t>(mw) * npb, 0.0);
    dlon_.assign(lon_.size(), 0.0);
    for (int m = -l_max; m <= l_max; ++m)
      for (int j = 0; j < npb; ++j) {
        lon_[(m + l_max) * npb + j] = longitude_factor(m, phi_[j]);
        dlon_[(m + l_max) * npb + j] = longitude_derivative(m, phi_[j]);
      }
  }

  double eigenfunction(std::size_t k, std::size_t i) const override {
    const std::size_t b = i / npb_, j = i % npb_;
    return band_value_[k * bands_ + b] * lon_[(mode_m_[k] + l_max_) * npb_ + j] / r_;
  }

  Vec3 eigenfunction_gradient(std::size_t k, std::size_t i) const override {
    const std::size_t b = i / npb_, j = i % npb_;
    const std::size_t lm = (mode_m_[k] + l_max_) * npb_ + j;
    return {band_dtheta_[k * bands_ + b] * lon_[lm] / (r_ * r_),
            band_value_[k * bands_ + b] * dlon_[lm] / (r_ * r_ * sin_theta_[b]), 0.0};
  }

  std::vector<double> project(std::span<const double> values) const override {
    // Longitudinal transform per band, then Gauss-Legendre in colatitude.
    const int mw = 2 * l_max_ + 1;
    std::vector<double> f(static_cast<std::size_t>(bands_) * mw, 0.0);
    for (int b = 0; b < bands_; ++b)
      for (int mi = 0; mi < mw; ++mi) {
        double s = 0.0;
        for (int j = 0; j < npb_; ++j) s += values[b * npb_ + j] * lon_[mi * npb_ + j];
        f[b * mw + mi] = s;
      }
    std::vector<double> c(mode_l_.size(), 0.0);
    const double scale = r_ * 2.0 * kPi / npb_;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const int mi = mode_m_[k] + l_max_;
      double s = 0.0;
      for (int b = 0; b < bands_; ++b) s += band_weight_[b] * band_value_[k * bands_ + b] * f[b * mw + mi];
      c[k] = s * scale;
    }
    return c;
  }

  std::vector<double> synthesize(std::span<const double> coeffs) const override {
    return synthesize_with(coeffs, band_value_, lon_, 1.0 / r_, false);
  }

  std::vector<Vec3> synthesize_gradient(std::span<const double> coeffs) const override {
    const auto gt = synthesize_with(coeffs, band_dtheta_, lon_, 1.0 / (r_ * r_), false);
    const auto gp = synthesize_with(coeffs, band_value_, dlon_, 1.0 / (r_ * r_), true);
    std::vector<Vec3> g(nodes.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = {gt[i], gp[i], 0.0};
    return g;
  }

  double evaluate_at(const Vec3& x, std::span<const double> coeffs) const override {
    const double rr = norm(x);
    if (rr == 0.0) throw DomainError("sphere evaluate_at: zero point");
    const double mu = std::clamp(x[2] / rr, -1.0, 1.0);
    const double phi = std::atan2(x[1], x[0]);
    std::vector<double> q, dq;
    legendre_table(l_max_, mu, q, dq);
    double sum = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      if (coeffs[k] == 0.0) continue;
      const std::size_t at = static_cast<std::size_t>(mode_l_[k]) * (l_max_ + 1) + std::abs(mode_m_[k]);
      sum += coeffs[k] * q[at] * longitude_factor(mode_m_[k], phi) / r_;
    }
    return sum;
  }

  double modal_sum(std::size_t p, std::size_t q, std::span<const double> w) const override {
    return zonal(dot(nodes[p], nodes[q]) / (r_ * r_), w);
  }

  double modal_sum_points(const Vec3& x, const Vec3& y, std::span<const double> w) const override {
    return zonal(dot(x, y) / (norm(x) * norm(y)), w);
  }

  double distance(std::size_t p, std::size_t q) const override {
    return point_distance(nodes[p], nodes[q]);
  }

  double point_distance(const Vec3& x, const Vec3& y) const override {
    return r_ * std::atan2(norm(cross(x, y)), dot(x, y));
  }

  Vec3 displacement(std::size_t p, std::size_t q) const override {
    const Vec3& x = nodes[p];
    const Vec3& y = nodes[q];
    const double c = dot(x, y) / (r_ * r_);
    Vec3 v{y[0] - c * x[0], y[1] - c * x[1], y[2] - c * x[2]};
    const double nv = norm(v);
    if (nv == 0.0) return {0.0, 0.0, 0.0};
    const double d = distance(p, q);
    const auto [et, ep] = frame(p);
    return {d * dot(v, et) / nv, d * dot(v, ep) / nv, 0.0};
  }

  Vec3 cell_size(std::size_t p) const override {
    const std::size_t b = p / npb_;
    return {r_ * band_weight_[b] / sin_theta_[b], r_ * sin_theta_[b] * 2.0 * kPi / npb_, 0.0};
  }

  Vec3 point_along(std::size_t p, const Vec3& direction, double dist) const override {
    const double nd = std::hypot(direction[0], direction[1]);
    if (nd == 0.0 || dist == 0.0) return nodes[p];
    const auto [et, ep] = frame(p);
    const double a = dist / r_;
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
      const double t = (direction[0] * et[c] + direction[1] * ep[c]) / nd;
      out[c] = std::cos(a) * nodes[p][c] + std::sin(a) * r_ * t;
    }
    return out;
  }

  std::size_t row_representative(std::size_t p) const override { return (p / npb_) * npb_; }

  std::size_t equivalent_column(std::size_t p, std::size_t q) const override {
    const std::size_t jp = p % npb_, jq = q % npb_;
    return (q / npb_) * npb_ + (jq + npb_ - jp) % npb_;
  }

 private:
  double r_;
  int l_max_, npb_, bands_;
  std::vector<double> mu_, band_weight_, sin_theta_, phi_;
  std::vector<int> mode_l_, mode_m_;
  std::vector<double> band_value_, band_dtheta_, lon_, dlon_;

  std::pair<Vec3, Vec3> frame(std::size_t p) const {
    const std::size_t b = p / npb_, j = p % npb_;
    const double ct = mu_[b], st = sin_theta_[b];
    const double cp = std::cos(phi_[j]), sp = std::sin(phi_[j]);
    return {Vec3{ct * cp, ct * sp, -st}, Vec3{-sp, cp, 0.0}};
  }

  // Addition theorem: sum over m of Y_l^m(x) Y_l^m(y) = (2l+1)/(4 pi) P_l(cos gamma).
  double zonal(double cos_gamma, std::span<const double> w) const {
    std::vector<double> p;
    const int l_top = std::min<int>(l_max_, static_cast<int>(std::sqrt(double(w.size()))) - 1);
    legendre_p(std::max(l_top, 0), std::clamp(cos_gamma, -1.0, 1.0), p);
    double sum = 0.0;
    for (int l = 0; l <= l_top; ++l) {
      const double wl = w[static_cast<std::size_t>(l) * l];
      if (wl != 0.0) sum += wl * (2.0 * l + 1.0) / (4.0 * kPi * r_ * r_) * p[l];
    }
    return sum;
  }

  std::vector<double> synthesize_with(std::span<const double> coeffs,
                                      const std::vector<double>& band_table,
                                      const std::vector<double>& lon_table, double scale,
                                      bool divide_sin) const {
    const int mw = 2 * l_max_ + 1;
    std::vector<double> g(static_cast<std::size_t>(bands_) * mw, 0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      if (coeffs[k] == 0.0) continue;
      const int mi = mode_m_[k] + l_max_;
      for (int b = 0; b < bands_; ++b) g[b * mw + mi] += coeffs[k] * band_table[k * bands_ + b];
    }
    std::vector<double> v(nodes.size(), 0.0);
    for (int b = 0; b < bands_; ++b) {
      const double fb = scale / (divide_sin ? sin_theta_[b] : 1.0);
      for (int mi = 0; mi < mw; ++mi) {
        const double a = g[b * mw + mi] * fb;
        if (a == 0.0) continue;
        for (int j = 0; j < npb_; ++j) v[b * npb_ + j] += a * lon_table[mi * npb_ + j];
      }
    }
    return v;
  }
};

}  // namespace

SpectralManifold build_sphere(double radius, int l_max, int nodes_per_band, int bands) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw DomainError("build_sphere: radius must be positive");
  if (l_max < 1) throw DomainError("build_sphere: l_max must be >= 1");
  if (bands <= 0) bands = nodes_per_band / 2;
  if (bands < l_max + 1 || nodes_per_band < 2 * l_max + 1)
    throw CapacityError("build_sphere: layout " + std::to_string(bands) + " bands x " +
                        std::to_string(nodes_per_band) +
                        " longitudes is too coarse for l_max=" + std::to_string(l_max) +
                        " (need bands >= l_max+1 and nodes_per_band >= 2 l_max + 1)");
  return SpectralManifold(std::make_shared<SphereImpl>(radius, l_max, nodes_per_band, bands));
}

}  // namespace fraclap
