#pragma once

// Heat kernel as a truncated eigensum, the heat semigroup, and an
// independent lattice-image oracle for flat tori.

#include <cstddef>
#include <vector>

#include "fraclap/manifold.hpp"

namespace fraclap {

class HeatEvaluator {
 public:
  /// `modes` = 0 uses every retained mode of the manifold.
  explicit HeatEvaluator(SpectralManifold m, std::size_t modes = 0);

  const SpectralManifold& manifold() const { return m_; }
  std::size_t mode_count() const { return modes_; }
  /// Time below which the eigensum truncation exceeds 1e-3.
  double t_gauss() const { return t_gauss_; }
  /// e^{-lambda_{K-1} t}: size of the first discarded term relative to the constant mode.
  double truncation_bound(double t) const;
  bool reliable(double t) const { return t >= t_gauss_; }

 private:
  SpectralManifold m_;
  std::size_t modes_;
  double t_gauss_;
};

double heat_kernel(const HeatEvaluator& h, std::size_t p, std::size_t q, double t);

/// Heat kernel between arbitrary points (torus and sphere).
double heat_kernel_points(const HeatEvaluator& h, const Vec3& x, const Vec3& y, double t);

/// Flat-torus heat kernel by summing Gaussians over lattice images with
/// |m_d| <= image_radius on every axis. Throws AccuracyError (carrying the
/// smallest sufficient radius as suggestion) when the discarded images may
/// exceed 1e-14 relative.
double heat_kernel_torus_images(const std::vector<double>& lengths, const Vec3& x, const Vec3& y,
                                double t, int image_radius);

/// Smallest image radius meeting the 1e-14 tail bound.
int required_image_radius(const std::vector<double>& lengths, double t);

Field heat_apply(const HeatEvaluator& h, const Field& u, double t);

struct HeatTraceRow {
  double t;
  double value;
  bool reliable;
};

std::vector<HeatTraceRow> heat_trace(const HeatEvaluator& h, std::size_t p, std::size_t q,
                                     const std::vector<double>& times);

/// Two-sided Gaussian envelope diagnostic: min and max over the sampled
/// (q, t) of H(p,q,t) / (t^{-n/2} e^{-d^2/(c t)}). Reported, not asserted.
struct GaussianEnvelope {
  double c;
  double lower;
  double upper;
};

GaussianEnvelope gaussian_envelope(const HeatEvaluator& h, std::size_t p,
                                   const std::vector<double>& times, double c);

}  // namespace fraclap
