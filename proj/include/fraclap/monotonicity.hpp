#pragma once

// Localized density Phi(R) = R^{s-n} (c int_{B+_R} z^{1-s} |grad U|^2 + int_{B_R} F(u))
// on half-balls around (p0, 0) and the monotonicity sweep over radii.

#include <cstddef>
#include <limits>
#include <vector>

#include "fraclap/extension.hpp"
#include "fraclap/fracops.hpp"

namespace fraclap {

struct HalfBallQuadrature {
  std::size_t center = 0;
  /// Increasing, each <= injectivity_radius / 4.
  std::vector<double> radii;
  /// Includes 0; must reach the largest radius.
  std::vector<double> z_grid;
  /// Weight of the extension energy; NaN means beta_s / 2.
  double prefactor = std::numeric_limits<double>::quiet_NaN();
};

/// Validated quadrature; an empty z_grid defaults to the graded grid up to max radius.
HalfBallQuadrature make_half_ball(const SpectralManifold& m, std::size_t center,
                                  std::vector<double> radii, std::vector<double> z_grid = {});

/// Throws DomainError on a bad center, unsorted radii, radii above inj/4 or a short z grid.
void validate_half_ball(const SpectralManifold& m, const HalfBallQuadrature& hb);

struct PhiTerms {
  double R = 0.0;
  double sobolev = 0.0;    // int_{B+_R} z^{1-s} |grad U|^2
  double potential = 0.0;  // int_{B_R} F(u)
  double phi = 0.0;
};

/// Energy density z^{1-s}|grad U|^2 on nodes x z_grid, integrated per column.
class HalfBallDensity {
 public:
  HalfBallDensity(const SpectralManifold& m, const Field& u, const ExtensionField& E,
                  const EnergySpec& spec, const HalfBallQuadrature& hb);

  PhiTerms at(double R) const;

 private:
  SpectralManifold m_;
  HalfBallQuadrature hb_;
  double s_ = 1.0, prefactor_ = 0.0;
  struct SubCell {
    double dist, ext, weight;
  };
  std::vector<SubCell> sub_;
  std::vector<std::size_t> sub_begin_;
  std::vector<double> pot_;
  std::vector<double> z_, sigma_;
  // Per z index j >= 1 and node p: density g = z * z^{1-s}|grad U|^2 and the
  // cumulative column integral up to z_j.
  std::vector<std::vector<double>> g_, cum_;
  // Leading small-z behaviour at z_1: |grad_p U|^2 and (z^{1-s} U_z)^2.
  std::vector<double> grad2_, flux2_;

  double column(std::size_t p, double Z) const;
};

/// Throws DomainError if R exceeds the injectivity cap or the z grid.
PhiTerms phi(const SpectralManifold& m, const Field& u, const ExtensionField& E,
             const EnergySpec& spec, const HalfBallQuadrature& hb, double R);

struct MonotonicityRecord {
  double R = 0.0;
  double sobolev = 0.0;
  double potential = 0.0;
  double phi = 0.0;
  double phi_drift = 0.0;  // Phi e^{C sqrt(K) R}
  double dphi = 0.0;       // finite-difference Phi'(R)
};

struct MonotonicityReport {
  std::vector<MonotonicityRecord> records;
  double C_drift = 0.0;
  double K = 0.0;
  double phi_mean = 0.0;
  /// min over consecutive radii of the change in phi_drift.
  double min_step = 0.0;
  double tol_mono = 0.0;
  bool monotone = true;
  /// max |Phi / mean - 1|.
  double near_constancy = 0.0;
  /// sup |Pi_K u| - sup |u|.
  double gibbs_overshoot = 0.0;
};

/// Requires at least 8 radii. tol_mono = tol_rel * mean Phi.
MonotonicityReport monotonicity_sweep(const SpectralManifold& m, const Field& u,
                                      const EnergySpec& spec, const HalfBallQuadrature& hb,
                                      double C_drift, double tol_rel = 1e-3);

struct DriftSweep {
  std::vector<double> C_values;
  std::vector<bool> passed;
  /// NaN when no value passes.
  double smallest_passing = std::numeric_limits<double>::quiet_NaN();
};

/// Verdicts for each C (default {1, 2, 4, 8, 16} * n) from one Phi evaluation.
DriftSweep drift_sweep(const SpectralManifold& m, const Field& u, const EnergySpec& spec,
                       const HalfBallQuadrature& hb, std::vector<double> C_values = {},
                       double tol_rel = 1e-3);

}  // namespace fraclap
