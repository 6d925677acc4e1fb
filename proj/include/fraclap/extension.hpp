#pragma once

// Caffarelli-Silvestre extension in modal form. Each eigenmode extends by
// the 1D profile
//   u_lambda(z) = z^s / (2^s Gamma(s/2)) int_0^inf e^{-lambda t - z^2/4t} t^{-1-s/2} dt,
// evaluated after the substitution t = z^2 / 4r.

#include <cstddef>
#include <vector>

#include "fraclap/kernel.hpp"
#include "fraclap/manifold.hpp"

namespace fraclap {

double mode_profile(double lambda, double s, double z);
double mode_profile_derivative(double lambda, double s, double z);

/// {0} followed by z_min * rho^j up to the first node >= z_max.
std::vector<double> graded_z_grid(double z_max, double z_min = 1e-4, double rho = 1.15);

/// int_0^{z_max} z^{1-s} (lambda u^2 + u'^2) dz; equals lambda^{s/2}/beta_s as z_max -> inf.
double mode_energy(double lambda, double s, double z_max);

/// lim z^{1-s} u'(z) as z -> 0, extrapolated from the six smallest positive
/// grid nodes. Throws AccuracyError when the fit residual is too large.
double weighted_derivative_limit(double lambda, double s, const std::vector<double>& z_grid);

/// Max over interior grid nodes of the relative residual of
/// u'' + (1-s)/z u' - lambda u = 0, by central differences around each node.
double profile_pde_residual(double lambda, double s, const std::vector<double>& z_grid);

class ExtensionField {
 public:
  ExtensionField(SpectralManifold m, FracParams params, std::vector<double> coeffs,
                 std::vector<double> z_grid);

  const SpectralManifold& manifold() const { return m_; }
  const FracParams& params() const { return params_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  const std::vector<double>& z_grid() const { return z_; }
  /// Modes with a coefficient above 1e-14 of the largest one.
  const std::vector<std::size_t>& active_modes() const { return active_; }

  /// u_k(z_j) and u_k'(z_j) for mode k (1 and 0 for inactive modes' trace only).
  double profile(std::size_t k, std::size_t j) const;
  double profile_derivative(std::size_t k, std::size_t j) const;

  /// U(., z_j) at every node.
  std::vector<double> slice(std::size_t j) const;
  /// Tangential gradient of U(., z_j) in each node's frame.
  std::vector<Vec3> slice_gradient(std::size_t j) const;
  /// dU/dz(., z_j).
  std::vector<double> slice_dz(std::size_t j) const;

 private:
  SpectralManifold m_;
  FracParams params_;
  std::vector<double> coeffs_;
  std::vector<double> z_;
  std::vector<std::size_t> active_;
  std::vector<int> table_of_mode_;
  std::vector<double> table_lambda_;
  std::vector<std::vector<double>> values_, derivs_;

  std::vector<double> scaled(std::size_t j, bool derivative) const;
};

/// Throws DomainError for an empty or non-increasing z grid.
ExtensionField extend(const SpectralManifold& m, const Field& u, const FracParams& params,
                      std::vector<double> z_grid);

/// Recovered fractional Laplacian -beta_s lim z^{1-s} dU/dz.
Field dtn(const ExtensionField& e);

/// 2 beta_s int z^{1-s} |grad U|^2 over M x (0, z_max), modally. Throws
/// AccuracyError (suggesting z_max) when the grid stops before 8/sqrt(lambda)
/// for the smallest active positive eigenvalue.
double extension_energy(const ExtensionField& e);

}  // namespace fraclap
