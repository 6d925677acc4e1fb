#pragma once

// Fractional Laplacians by four routes, H^{s/2} seminorms, fractional and
// classical perimeters, the energy u -> [u]^2 + int F(u), and energies
// along flows of vector fields.

#include <functional>
#include <string>
#include <vector>

#include "fraclap/kernel.hpp"
#include "fraclap/manifold.hpp"

namespace fraclap {

Field fraclap_spectral(const SpectralManifold& m, const Field& u, const FracParams& params);

/// (1/Gamma(-s/2)) int_0^inf (e^{-lambda t} - 1) t^{-1-s/2} dt by log-t panels
/// with closed-form end pieces. Equals lambda^{s/2}.
double bochner_multiplier(double lambda, double s, int points_per_unit = 32);

/// Throws AccuracyError if the multiplier disagrees with a half-resolution estimate.
Field fraclap_bochner(const SpectralManifold& m, const Field& u, const FracParams& params);

enum class PvFamily { gaussian_factor, ball_removal, t_truncation };

const char* to_string(PvFamily f);
PvFamily pv_family_from_string(const std::string& name);

struct PvScheme {
  PvFamily family = PvFamily::gaussian_factor;
  /// Strictly decreasing, at least 3 entries.
  std::vector<double> ladder;
  /// Number of correction powers eliminated by the extrapolation.
  int order = 3;

  /// Throws ConfigError unless the ladder is valid.
  void validate() const;
  /// eps_j = eps0 2^{-j}, j < rungs.
  static PvScheme geometric(PvFamily family, double eps0, int rungs = 5, int order = 3);
};

/// Leading eps-powers of I(eps) - I(0) for a family, smallest first.
std::vector<double> pv_correction_exponents(PvFamily family, int n, double s, int order);

/// Default eps0 = 128 h with h = (volume / nodes)^{1/n}.
double default_pv_eps0(const SpectralManifold& m);

struct PvResult {
  Field value;
  /// ladder_values[j][p] = I(eps_j) at node p.
  std::vector<std::vector<double>> ladder_values;
  /// Per node: rms fit residual and |I(eps_last) - extrapolated|.
  std::vector<double> fit_residual;
  std::vector<double> last_correction;
};

/// int (u(p) - u(q)) K^eps(p, q) dV_q at every node for one eps.
std::vector<double> regularized_integral(const SingularKernel& k, const Field& u, PvFamily family,
                                         double eps);

/// Throws AccuracyError (raw ladder of the worst node attached) when the
/// extrapolation residual exceeds 1e-3 of the field scale.
PvResult fraclap_pv(const SpectralManifold& m, const Field& u, const FracParams& params,
                    const PvScheme& scheme, const SubordinationQuadrature& quad);

/// 2 sum_k lambda_k^{s/2} <u, phi_k>^2.
double seminorm_spectral(const SpectralManifold& m, const Field& u, const FracParams& params);

/// sum over node pairs of (u(p)-u(q))^2 K_s w_p w_q. Smooth fields: the local
/// model (grad u . z)^2 alpha/|z|^{n+s} is subtracted inside a cutoff and its
/// integral added back. Two-valued fields: near pairs use the Euclidean kernel
/// averaged over the two cells.
double seminorm_double_integral(const SpectralManifold& m, const Field& u,
                                const FracParams& params, const SubordinationQuadrature& quad);

/// int_{cell a} int_{cell b} |x - y|^{-(n+s)} for axis-aligned boxes with
/// extents ea, eb and centre offset c (first n components used).
double cell_pair_integral(int n, double s, const Vec3& c, const Vec3& ea, const Vec3& eb);

/// Throws DomainError for non-binary E or s outside (0, 1).
double perimeter_s(const SpectralManifold& m, const Field& E, const FracParams& params,
                   const SubordinationQuadrature& quad);

/// Face-counting perimeter of a nodal set on a torus grid (cells as boxes).
double classical_perimeter(const SpectralManifold& m, const Field& E);

struct PerimeterLimitRow {
  std::size_t shape = 0;
  double s = 0.0;
  double per_s = 0.0;
  double per = 0.0;
  double ratio = 0.0;  // (1-s) Per_s / Per
};

struct PerimeterLimitReport {
  std::vector<PerimeterLimitRow> rows;
  std::vector<double> s_values;
  /// (max - min) / mean of the ratios at each s.
  std::vector<double> spread;
  /// +1 if every shape's ratio is nondecreasing in s, -1 if nonincreasing, 0 otherwise.
  int trend = 0;
};

PerimeterLimitReport perimeter_limit_report(const SpectralManifold& m,
                                            const std::vector<Field>& shapes,
                                            const std::vector<double>& s_ladder);

class Potential {
 public:
  enum class Kind { zero, double_well, tabulated };

  static Potential zero();
  /// F(v) = (1 - v^2)^2.
  static Potential double_well();
  /// Linear interpolation, constant beyond the ends. Throws ConfigError for
  /// unsorted abscissae or negative values.
  static Potential tabulated(std::vector<double> x, std::vector<double> y);

  double operator()(double v) const;
  Kind kind() const { return kind_; }

 private:
  Kind kind_ = Kind::zero;
  std::vector<double> x_, y_;
};

enum class SeminormRoute { spectral, double_integral };

struct EnergySpec {
  Potential F = Potential::zero();
  FracParams params;
  SeminormRoute route = SeminormRoute::spectral;
};

double energy(const SpectralManifold& m, const Field& u, const EnergySpec& spec,
              const SubordinationQuadrature& quad);

using ScalarFunction = std::function<double(const Vec3&)>;
using VectorField = std::function<Vec3(const Vec3&)>;

/// psi_X^t(x) by RK4 in the chart (torus coordinates, embedded sphere).
/// Throws DomainError on meshes or for fields not tangent to the sphere.
Vec3 flow(const SpectralManifold& m, const VectorField& X, const Vec3& x, double t);

struct FlowRow {
  double t = 0.0;
  double energy = 0.0;
};

struct FlowReport {
  std::vector<FlowRow> rows;
  /// Centered difference at t = 0 with the smallest symmetric pair of times.
  double derivative = 0.0;
  /// Largest |second difference| / dt^2 along the sorted ladder.
  double max_second_difference = 0.0;
};

/// Energy of u o psi^{-t} for each t. The ladder must contain 0 and a
/// symmetric pair +-t.
FlowReport energy_along_flow(const SpectralManifold& m, const ScalarFunction& u,
                             const VectorField& X, const EnergySpec& spec,
                             const std::vector<double>& t_ladder,
                             const SubordinationQuadrature& quad);

}  // namespace fraclap
