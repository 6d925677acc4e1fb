#include "fraclap/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"

namespace fraclap {

namespace {

using numerics::kPi;

constexpr double kImageTolerance = 1e-14;

double wrap_centered(double x, double L) {
  x = std::fmod(x, L);
  if (x < -0.5 * L) x += L;
  if (x >= 0.5 * L) x -= L;
  return x;
}

// Relative size of the images with |m| > radius along one axis, bounded by
// the first few omitted terms against the nearest image.
double image_tail(double L, double t, int radius) {
  double tail = 0.0;
  for (int m = radius + 1; m <= radius + 40; ++m) {
    const double r = (m - 0.5) * L;
    // Measured against the smallest possible principal term e^{-(L/2)^2/4t}.
    tail += 2.0 * std::exp(-(r * r - 0.25 * L * L) / (4.0 * t));
  }
  return tail;
}

std::vector<double> mode_weights(const HeatEvaluator& h, double t) {
  const auto& lam = h.manifold().eigenvalues();
  std::vector<double> w(lam.size(), 0.0);
  for (std::size_t k = 0; k < h.mode_count(); ++k) w[k] = std::exp(-lam[k] * t);
  return w;
}

}  // namespace

HeatEvaluator::HeatEvaluator(SpectralManifold m, std::size_t modes)
    : m_(std::move(m)), modes_(modes == 0 ? m_.mode_count() : modes) {
  if (modes_ > m_.mode_count())
    throw CapacityError("HeatEvaluator: requested more modes than the manifold retains");
  const double lam_top = m_.eigenvalues()[modes_ - 1];
  t_gauss_ = lam_top > 0.0 ? std::log(1e3) / lam_top : std::numeric_limits<double>::infinity();
}

double HeatEvaluator::truncation_bound(double t) const {
  return std::exp(-m_.eigenvalues()[modes_ - 1] * t);
}

double heat_kernel(const HeatEvaluator& h, std::size_t p, std::size_t q, double t) {
  if (!(t > 0.0)) throw DomainError("heat_kernel: t must be positive");
  const auto& m = h.manifold();
  if (p >= m.node_count() || q >= m.node_count())
    throw DomainError("heat_kernel: node index out of range");
  // Ordering the pair makes the result symmetric bit for bit.
  if (q < p) std::swap(p, q);
  return m.modal_sum(p, q, mode_weights(h, t));
}

double heat_kernel_points(const HeatEvaluator& h, const Vec3& x, const Vec3& y, double t) {
  if (!(t > 0.0)) throw DomainError("heat_kernel: t must be positive");
  return h.manifold().modal_sum_points(x, y, mode_weights(h, t));
}

int required_image_radius(const std::vector<double>& lengths, double t) {
  int radius = 0;
  for (double L : lengths)
    while (image_tail(L, t, radius) > kImageTolerance) ++radius;
  return radius;
}

double heat_kernel_torus_images(const std::vector<double>& lengths, const Vec3& x, const Vec3& y,
                                double t, int image_radius) {
  if (!(t > 0.0)) throw DomainError("heat_kernel_torus_images: t must be positive");
  if (lengths.empty() || lengths.size() > 3)
    throw DomainError("heat_kernel_torus_images: 1 to 3 axes supported");
  if (image_radius < 0) throw DomainError("heat_kernel_torus_images: negative image radius");
  const int needed = required_image_radius(lengths, t);
  if (needed > image_radius) {
    double worst = 0.0;
    for (double L : lengths) worst = std::max(worst, image_tail(L, t, image_radius));
    throw AccuracyError("heat_kernel_torus_images: image radius " + std::to_string(image_radius) +
                            " leaves a relative tail above 1e-14",
                        worst, {}, static_cast<double>(needed));
  }
  double value = 1.0;
  for (std::size_t d = 0; d < lengths.size(); ++d) {
    const double L = lengths[d];
    const double delta = wrap_centered(y[d] - x[d], L);
    double axis = 0.0;
    for (int m = -image_radius; m <= image_radius; ++m) {
      const double r = delta + m * L;
      axis += std::exp(-r * r / (4.0 * t));
    }
    value *= axis / std::sqrt(4.0 * kPi * t);
  }
  return value;
}

Field heat_apply(const HeatEvaluator& h, const Field& u, double t) {
  if (!(t >= 0.0)) throw DomainError("heat_apply: t must be nonnegative");
  require_same_manifold(h.manifold(), u.manifold());
  const auto& m = h.manifold();
  auto c = m.project(u.values());
  const auto& lam = m.eigenvalues();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = k < h.mode_count() ? c[k] * std::exp(-lam[k] * t) : 0.0;
  return Field(m, m.synthesize(c));
}

std::vector<HeatTraceRow> heat_trace(const HeatEvaluator& h, std::size_t p, std::size_t q,
                                     const std::vector<double>& times) {
  std::vector<HeatTraceRow> rows;
  rows.reserve(times.size());
  for (double t : times) rows.push_back({t, heat_kernel(h, p, q, t), h.reliable(t)});
  return rows;
}

GaussianEnvelope gaussian_envelope(const HeatEvaluator& h, std::size_t p,
                                   const std::vector<double>& times, double c) {
  if (!(c > 0.0)) throw DomainError("gaussian_envelope: c must be positive");
  const auto& m = h.manifold();
  GaussianEnvelope env{c, std::numeric_limits<double>::infinity(), 0.0};
  const double half_n = 0.5 * m.dim();
  for (double t : times) {
    if (!h.reliable(t)) continue;
    for (std::size_t q = 0; q < m.node_count(); ++q) {
      const double d = m.distance(p, q);
      const double ratio = heat_kernel(h, p, q, t) / (std::pow(t, -half_n) * std::exp(-d * d / (c * t)));
      env.lower = std::min(env.lower, ratio);
      env.upper = std::max(env.upper, ratio);
    }
  }
  return env;
}

}  // namespace fraclap
