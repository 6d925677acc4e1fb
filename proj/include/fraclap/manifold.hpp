#pragma once

// Spectral discretizations of closed manifolds: flat tori, the round
// 2-sphere and closed triangle meshes. A SpectralManifold is an immutable
// value with shared ownership of its data; copies are cheap and safe to use
// from several threads.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fraclap {

using Vec3 = std::array<double, 3>;

enum class ManifoldKind { torus, sphere, mesh };

struct TorusDescriptor {
  std::vector<double> lengths;
  std::vector<int> grid;
};

struct SphereDescriptor {
  double radius = 1.0;
  int l_max = 0;
  int bands = 0;
  int nodes_per_band = 0;
};

struct MeshDescriptor {
  std::size_t vertices = 0;
  std::size_t faces = 0;
};

using ManifoldDescriptor = std::variant<TorusDescriptor, SphereDescriptor, MeshDescriptor>;

namespace detail {
class ManifoldImpl;
}

class SpectralManifold {
 public:
  explicit SpectralManifold(std::shared_ptr<const detail::ManifoldImpl> impl);

  int dim() const;
  ManifoldKind kind() const;
  const ManifoldDescriptor& descriptor() const;
  std::size_t node_count() const;
  std::size_t mode_count() const;

  /// Node coordinates: torus chart coordinates (unused axes zero), sphere and
  /// mesh embedding coordinates in R^3.
  const std::vector<Vec3>& nodes() const;
  const std::vector<double>& weights() const;
  double volume() const;
  const std::vector<double>& eigenvalues() const;
  double curvature_bound() const;
  double injectivity_radius() const;

  double eigenfunction(std::size_t k, std::size_t node) const;
  /// Gradient of eigenfunction k at a node, in the node's orthonormal tangent
  /// frame (first dim() components meaningful).
  Vec3 eigenfunction_gradient(std::size_t k, std::size_t node) const;
  std::vector<double> eigenvector(std::size_t k) const;

  /// Modal coefficients <u, phi_k> under the discrete weighted inner product.
  std::vector<double> project(std::span<const double> values) const;
  std::vector<double> synthesize(std::span<const double> coeffs) const;
  std::vector<Vec3> synthesize_gradient(std::span<const double> coeffs) const;
  /// Modal expansion evaluated off the node set (torus and sphere only).
  double evaluate_at(const Vec3& point, std::span<const double> coeffs) const;

  /// sum_k w_k phi_k(p) phi_k(q). `mode_weights` must depend on k only
  /// through lambda_k (true for every spectral multiplier).
  double modal_sum(std::size_t p, std::size_t q, std::span<const double> mode_weights) const;
  /// Same sum between arbitrary points (torus and sphere only).
  double modal_sum_points(const Vec3& x, const Vec3& y,
                          std::span<const double> mode_weights) const;

  double distance(std::size_t p, std::size_t q) const;
  /// Geodesic distance between arbitrary points (torus and sphere only).
  double point_distance(const Vec3& x, const Vec3& y) const;
  /// Tangent vector at p pointing to q with length ~ distance(p, q), in the
  /// tangent frame of p.
  Vec3 displacement(std::size_t p, std::size_t q) const;
  /// Extent of the quadrature cell of a node along each tangent-frame axis.
  Vec3 cell_size(std::size_t p) const;
  /// exp_p(distance * direction); direction given in the tangent frame of p
  /// (torus and sphere only).
  Vec3 point_along(std::size_t p, const Vec3& direction, double distance) const;

  /// Row symmetry: for functions f(p, q) invariant under the manifold's
  /// isometries (anything built from distance or the heat kernel),
  /// f(p, q) = f(row_representative(p), equivalent_column(p, q)).
  std::size_t row_representative(std::size_t p) const;
  std::size_t equivalent_column(std::size_t p, std::size_t q) const;

  /// max |G - Id| of the weighted Gram matrix of the retained eigenvectors.
  double gram_deviation() const;

  /// Stable hex digest of the discretization (descriptor, weights, spectrum).
  std::string digest() const;

  bool same_as(const SpectralManifold& other) const { return impl_ == other.impl_; }

 private:
  std::shared_ptr<const detail::ManifoldImpl> impl_;
};

/// Nodal samples of a real function on a manifold.
class Field {
 public:
  Field(SpectralManifold manifold, std::vector<double> values);

  const SpectralManifold& manifold() const { return manifold_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  SpectralManifold manifold_;
  std::vector<double> values_;
};

/// Samples f at every node.
template <typename F>
Field sample(const SpectralManifold& m, F&& f) {
  std::vector<double> v(m.node_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(m.nodes()[i]);
  return Field(m, std::move(v));
}

/// Throws DomainError unless both fields live on the same manifold.
void require_same_manifold(const SpectralManifold& a, const SpectralManifold& b);

SpectralManifold build_torus(int dim, std::vector<double> lengths, std::vector<int> grid,
                             std::size_t k_max);

/// Round sphere with Gauss-Legendre colatitude bands and uniform longitudes.
/// `bands` defaults to nodes_per_band / 2.
SpectralManifold build_sphere(double radius, int l_max, int nodes_per_band, int bands = 0);

/// Closed orientable triangle mesh given as ASCII OFF content.
SpectralManifold build_mesh(std::string_view off_content, std::size_t k_max,
                            double curvature_bound);

double geodesic_distance(const SpectralManifold& m, std::size_t p, std::size_t q);

/// Icosahedron refined `subdivisions` times and projected to a sphere, as OFF text.
std::string icosphere_off(int subdivisions, double radius = 1.0);

}  // namespace fraclap
