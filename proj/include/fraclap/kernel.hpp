#pragma once

// Exact constants of the fractional calculus and the subordinated singular
// kernel K_s(p,q) = c_s int_0^inf H(p,q,t) t^{-1-s/2} dt.
//
// The time integral is split at t_split. Below it the torus uses the
// lattice-image Gaussians and the sphere/mesh the Euclidean Gaussian
// surrogate in geodesic distance, both integrated in closed form through
// the upper incomplete gamma function. Above it the eigensum is integrated
// mode by mode.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "fraclap/manifold.hpp"

namespace fraclap {

struct FracParams {
  int n = 1;
  double s = 1.0;
  double alpha_ns = 0.0;
  double beta_s = 0.0;
  double c_s = 0.0;
};

/// Throws DomainError unless 0 < s < 2 and n >= 1.
FracParams constants(int n, double s);

/// alpha_{n,s} through the |Gamma(-s/2)| form, used to cross-check constants().
double alpha_abs_gamma_form(int n, double s);

struct SubordinationQuadrature {
  double t_split = 0.0;
  /// End of the panelled large-t range for regularized modal integrals.
  double t_max = 0.0;
  /// Gauss-Legendre points per unit of log t.
  int points_per_unit = 16;

  std::string digest() const;
};

/// t_split from e^{-lambda_{K-1} t} = 1e-10; t_max so the dropped tail of the
/// non-constant modes is below 1e-12.
SubordinationQuadrature default_quadrature(const SpectralManifold& m, const FracParams& params);

/// int_a^b g(t) dt/t with unit-width Gauss-Legendre panels in log t.
double log_panel_integral(const std::function<double(double)>& g, double a, double b,
                          int points_per_unit = 16);

/// Relative error of the panel engine on the Euclidean identity
/// c_s int (4 pi t)^{-n/2} e^{-d^2/4t} t^{-1-s/2} dt = alpha_{n,s} / d^{n+s}.
double subordination_self_test(int n, double s, double d, int points_per_unit = 16);

enum class Regularization {
  none,             // K_s
  gaussian_factor,  // integrand times e^{-eps^2/4t}
  t_truncation,     // time integral restricted to t >= eps^2/4
};

struct KernelValue {
  double value = 0.0;
  /// Bound on the surrogate defect (sphere/mesh) or quadrature error (torus).
  double error_bound = 0.0;
};

/// Constants of the surrogate defect model |H - G| <= C sqrt(K t) t^{-n/2} e^{-c d^2/t}.
struct SurrogateDefect {
  double C = 0.0;
  double c = 0.0;
};

/// Fitted once against a high-degree zonal reference on the unit sphere.
const SurrogateDefect& fitted_surrogate_defect();

class SingularKernel {
 public:
  SingularKernel(SpectralManifold m, FracParams params, SubordinationQuadrature quad);
  SingularKernel(SpectralManifold m, FracParams params);

  const SpectralManifold& manifold() const { return m_; }
  const FracParams& params() const { return params_; }
  const SubordinationQuadrature& quadrature() const { return quad_; }

  /// Throws SingularityError for p == q without regularization, DomainError
  /// for eps <= 0 with regularization, and AccuracyError when the surrogate
  /// defect bound exceeds `max_relative_defect` of the value.
  KernelValue evaluate(std::size_t p, std::size_t q, Regularization reg = Regularization::none,
                       double eps = 0.0) const;
  /// Same between arbitrary points (torus and sphere).
  KernelValue evaluate_points(const Vec3& x, const Vec3& y,
                              Regularization reg = Regularization::none, double eps = 0.0) const;

  /// Row K(p, .) over all nodes (diagonal set to 0 when singular). Rows of
  /// row representatives are computed once and cached.
  std::vector<double> row(std::size_t p, Regularization reg = Regularization::none,
                          double eps = 0.0) const;

  double max_relative_defect = 0.25;

 private:
  SpectralManifold m_;
  FracParams params_;
  SubordinationQuadrature quad_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, double>, std::shared_ptr<const std::vector<double>>> weights_;
  mutable std::map<std::tuple<std::size_t, int, double>, std::shared_ptr<const std::vector<double>>>
      rows_;

  const std::vector<double>& modal_weights(Regularization reg, double eps) const;
  std::shared_ptr<const std::vector<double>> representative_row(std::size_t rep,
                                                                Regularization reg,
                                                                double eps) const;
  KernelValue assemble(const Vec3& delta, double d, double modal, Regularization reg,
                       double eps) const;
};

double ks(const SpectralManifold& m, std::size_t p, std::size_t q, const FracParams& params,
          const SubordinationQuadrature& quad);

double ks_eps(const SpectralManifold& m, std::size_t p, std::size_t q, double eps,
              const FracParams& params, const SubordinationQuadrature& quad);

struct DefectRow {
  std::size_t direction = 0;
  double radius = 0.0;
  double kernel = 0.0;
  double model = 0.0;
  double normalized_defect = 0.0;
  double error_bound = 0.0;
};

/// Kernel along geodesic rays from node p against alpha/|z|^{n+s}. Directions
/// are tangent vectors in p's frame. Radii must lie within injectivity_radius/4.
std::vector<DefectRow> asymptotic_defect_report(const SpectralManifold& m, std::size_t p,
                                                const std::vector<Vec3>& directions,
                                                const std::vector<double>& radii,
                                                const FracParams& params,
                                                const SubordinationQuadrature& quad);

}  // namespace fraclap
