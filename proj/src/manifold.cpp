#include "fraclap/manifold.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>

#include "fraclap/errors.hpp"
#include "manifold_impl.hpp"

namespace fraclap {

namespace detail {

std::vector<double> ManifoldImpl::project(std::span<const double> values) const {
  std::vector<double> c(eigenvalues.size(), 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      sum += weights[i] * values[i] * eigenfunction(k, i);
    c[k] = sum;
  }
  return c;
}

std::vector<double> ManifoldImpl::synthesize(std::span<const double> coeffs) const {
  std::vector<double> v(nodes.size(), 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += coeffs[k] * eigenfunction(k, i);
  }
  return v;
}

std::vector<Vec3> ManifoldImpl::synthesize_gradient(std::span<const double> coeffs) const {
  std::vector<Vec3> g(nodes.size(), Vec3{0.0, 0.0, 0.0});
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 d = eigenfunction_gradient(k, i);
      for (int c = 0; c < 3; ++c) g[i][c] += coeffs[k] * d[c];
    }
  }
  return g;
}

double ManifoldImpl::evaluate_at(const Vec3&, std::span<const double>) const {
  throw DomainError("off-node evaluation is not available for this manifold kind");
}

double ManifoldImpl::modal_sum(std::size_t p, std::size_t q, std::span<const double> w) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] != 0.0) sum += w[k] * eigenfunction(k, p) * eigenfunction(k, q);
  return sum;
}

double ManifoldImpl::modal_sum_points(const Vec3&, const Vec3&, std::span<const double>) const {
  throw DomainError("off-node modal sums are not available for this manifold kind");
}

double ManifoldImpl::point_distance(const Vec3&, const Vec3&) const {
  throw DomainError("off-node distances are not available for this manifold kind");
}

Vec3 ManifoldImpl::point_along(std::size_t, const Vec3&, double) const {
  throw DomainError("exponential map is not available for this manifold kind");
}

}  // namespace detail

SpectralManifold::SpectralManifold(std::shared_ptr<const detail::ManifoldImpl> impl)
    : impl_(std::move(impl)) {}

int SpectralManifold::dim() const { return impl_->dim; }
ManifoldKind SpectralManifold::kind() const { return impl_->kind; }
const ManifoldDescriptor& SpectralManifold::descriptor() const { return impl_->descriptor; }
std::size_t SpectralManifold::node_count() const { return impl_->nodes.size(); }
std::size_t SpectralManifold::mode_count() const { return impl_->eigenvalues.size(); }
const std::vector<Vec3>& SpectralManifold::nodes() const { return impl_->nodes; }
const std::vector<double>& SpectralManifold::weights() const { return impl_->weights; }
double SpectralManifold::volume() const { return impl_->volume; }
const std::vector<double>& SpectralManifold::eigenvalues() const { return impl_->eigenvalues; }
double SpectralManifold::curvature_bound() const { return impl_->curvature_bound; }
double SpectralManifold::injectivity_radius() const { return impl_->injectivity_radius; }

double SpectralManifold::eigenfunction(std::size_t k, std::size_t node) const {
  return impl_->eigenfunction(k, node);
}

Vec3 SpectralManifold::eigenfunction_gradient(std::size_t k, std::size_t node) const {
  return impl_->eigenfunction_gradient(k, node);
}

std::vector<double> SpectralManifold::eigenvector(std::size_t k) const {
  std::vector<double> v(node_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = impl_->eigenfunction(k, i);
  return v;
}

std::vector<double> SpectralManifold::project(std::span<const double> values) const {
  if (values.size() != node_count()) throw DomainError("project: field size mismatch");
  return impl_->project(values);
}

std::vector<double> SpectralManifold::synthesize(std::span<const double> coeffs) const {
  if (coeffs.size() != mode_count()) throw DomainError("synthesize: coefficient size mismatch");
  return impl_->synthesize(coeffs);
}

std::vector<Vec3> SpectralManifold::synthesize_gradient(std::span<const double> coeffs) const {
  if (coeffs.size() != mode_count()) throw DomainError("synthesize_gradient: size mismatch");
  return impl_->synthesize_gradient(coeffs);
}

double SpectralManifold::evaluate_at(const Vec3& point, std::span<const double> coeffs) const {
  return impl_->evaluate_at(point, coeffs);
}

double SpectralManifold::modal_sum(std::size_t p, std::size_t q,
                                   std::span<const double> mode_weights) const {
  return impl_->modal_sum(p, q, mode_weights);
}

double SpectralManifold::modal_sum_points(const Vec3& x, const Vec3& y,
                                          std::span<const double> mode_weights) const {
  return impl_->modal_sum_points(x, y, mode_weights);
}

double SpectralManifold::distance(std::size_t p, std::size_t q) const {
  return impl_->distance(p, q);
}

double SpectralManifold::point_distance(const Vec3& x, const Vec3& y) const {
  return impl_->point_distance(x, y);
}

Vec3 SpectralManifold::displacement(std::size_t p, std::size_t q) const {
  return impl_->displacement(p, q);
}

Vec3 SpectralManifold::cell_size(std::size_t p) const { return impl_->cell_size(p); }

Vec3 SpectralManifold::point_along(std::size_t p, const Vec3& direction, double distance) const {
  return impl_->point_along(p, direction, distance);
}

std::size_t SpectralManifold::row_representative(std::size_t p) const {
  return impl_->row_representative(p);
}

std::size_t SpectralManifold::equivalent_column(std::size_t p, std::size_t q) const {
  return impl_->equivalent_column(p, q);
}

double SpectralManifold::gram_deviation() const {
  const std::size_t k_count = mode_count();
  std::vector<std::vector<double>> vecs(k_count);
  for (std::size_t k = 0; k < k_count; ++k) vecs[k] = eigenvector(k);
  double worst = 0.0;
  const auto& w = weights();
  for (std::size_t j = 0; j < k_count; ++j) {
    for (std::size_t k = j; k < k_count; ++k) {
      double g = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) g += w[i] * vecs[j][i] * vecs[k][i];
      worst = std::max(worst, std::abs(g - (j == k ? 1.0 : 0.0)));
    }
  }
  return worst;
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  }
  void value(double v) { bytes(&v, sizeof v); }
  void value(std::int64_t v) { bytes(&v, sizeof v); }
};

}  // namespace

std::string SpectralManifold::digest() const {
  Fnv1a f;
  f.value(static_cast<std::int64_t>(dim()));
  f.value(static_cast<std::int64_t>(kind()));
  f.value(static_cast<std::int64_t>(node_count()));
  for (double w : weights()) f.value(w);
  for (double l : eigenvalues()) f.value(l);
  f.value(curvature_bound());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(f.h));
  return buf;
}

Field::Field(SpectralManifold manifold, std::vector<double> values)
    : manifold_(std::move(manifold)), values_(std::move(values)) {
  if (values_.size() != manifold_.node_count())
    throw DomainError("Field: value count does not match node count");
}

void require_same_manifold(const SpectralManifold& a, const SpectralManifold& b) {
  if (!a.same_as(b)) throw DomainError("fields live on different manifolds");
}

double geodesic_distance(const SpectralManifold& m, std::size_t p, std::size_t q) {
  if (p >= m.node_count() || q >= m.node_count())
    throw DomainError("geodesic_distance: node index out of range");
  return m.distance(p, q);
}

}  // namespace fraclap
