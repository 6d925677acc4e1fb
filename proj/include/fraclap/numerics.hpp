#pragma once

// Small numerical building blocks shared by the modules: Gauss-Legendre
// rules, gamma-function helpers, a C-infinity cutoff and a least-squares
// fit for extrapolation.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fraclap::numerics {

inline constexpr double kPi = 3.14159265358979323846;

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `n` points on [-1, 1]. Rules are cached.
const GaussRule& gauss_legendre(int n);

/// Integrates f over [a, b] with `panels` equal Gauss-Legendre panels.
double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        int panels, int points_per_panel = 16);

/// Upper incomplete gamma Gamma(a, x) for a > 0, x >= 0.
double upper_gamma(double a, double x);

/// Lower incomplete gamma gamma(a, x) for a > 0, x >= 0.
double lower_gamma(double a, double x);

/// Surface area of the unit sphere S^{n-1} in R^n.
double unit_sphere_area(int n);

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// C-infinity cutoff: 1 on (-inf, 0], 0 on [1, inf), monotone in between.
double smooth_cutoff(double x);

/// Least-squares fit of values ~ c_0 + sum_j c_j x^{p_j}. Returns c_0..c_m.
/// `exponents` must be distinct and positive.
std::vector<double> power_fit(std::span<const double> x, std::span<const double> values,
                              std::span<const double> exponents);

/// Worker count: FRACLAP_THREADS if set (>= 1), else hardware concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, n) on thread_count() threads, in contiguous
/// blocks. The first exception is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Root-mean-square residual of a power_fit.
double power_fit_residual(std::span<const double> x, std::span<const double> values,
                          std::span<const double> exponents, std::span<const double> coeffs);

}  // namespace fraclap::numerics
