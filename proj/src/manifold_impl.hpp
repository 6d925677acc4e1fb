#pragma once

#include <span>
#include <vector>

#include "fraclap/manifold.hpp"

namespace fraclap::detail {

/// Storage and behaviour shared by all manifold kinds. Kind-specific classes
/// override the evaluation hooks; the defaults are dense O(N K) loops.
class ManifoldImpl {
 public:
  virtual ~ManifoldImpl() = default;

  int dim = 0;
  ManifoldKind kind = ManifoldKind::torus;
  ManifoldDescriptor descriptor;
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  double volume = 0.0;
  std::vector<double> eigenvalues;
  double curvature_bound = 0.0;
  double injectivity_radius = 0.0;

  virtual double eigenfunction(std::size_t k, std::size_t i) const = 0;
  virtual Vec3 eigenfunction_gradient(std::size_t k, std::size_t i) const = 0;

  virtual std::vector<double> project(std::span<const double> values) const;
  virtual std::vector<double> synthesize(std::span<const double> coeffs) const;
  virtual std::vector<Vec3> synthesize_gradient(std::span<const double> coeffs) const;
  virtual double evaluate_at(const Vec3& point, std::span<const double> coeffs) const;

  virtual double modal_sum(std::size_t p, std::size_t q, std::span<const double> w) const;
  virtual double modal_sum_points(const Vec3& x, const Vec3& y, std::span<const double> w) const;

  virtual double distance(std::size_t p, std::size_t q) const = 0;
  virtual double point_distance(const Vec3& x, const Vec3& y) const;
  virtual Vec3 displacement(std::size_t p, std::size_t q) const = 0;
  virtual Vec3 cell_size(std::size_t p) const = 0;
  virtual Vec3 point_along(std::size_t p, const Vec3& direction, double dist) const;

  virtual std::size_t row_representative(std::size_t p) const { return p; }
  virtual std::size_t equivalent_column(std::size_t /*p*/, std::size_t q) const { return q; }
};

}  // namespace fraclap::detail
