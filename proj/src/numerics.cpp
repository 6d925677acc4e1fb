#include "fraclap/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>
#include <map>
#include <mutex>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "fraclap/errors.hpp"

namespace fraclap::numerics {

namespace {

GaussRule make_gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be >= 1");
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

double integrate_panels(const std::function<double(double)>& f, double a, double b, int panels,
                        int points_per_panel) {
  const auto& rule = gauss_legendre(points_per_panel);
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      sum += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
    total += 0.5 * width * sum;
  }
  return total;
}

double upper_gamma(double a, double x) {
  if (x <= 0.0) return std::tgamma(a);
  return boost::math::tgamma(a, x);
}

double lower_gamma(double a, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::tgamma_lower(a, x);
}

double unit_sphere_area(int n) { return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n); }

double unit_ball_volume(int n) { return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

double smooth_cutoff(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - x));
  const double b = std::exp(-1.0 / x);
  return a / (a + b);
}

std::vector<double> power_fit(std::span<const double> x, std::span<const double> values,
                              std::span<const double> exponents) {
  const auto rows = static_cast<Eigen::Index>(x.size());
  const auto cols = static_cast<Eigen::Index>(exponents.size() + 1);
  if (rows < cols) throw DomainError("power_fit: fewer samples than unknowns");
  // Column scaling by max|x|^p keeps the normal equations well conditioned.
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, std::abs(v));
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    a(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < cols; ++j)
      a(i, j) = std::pow(x[i] / xmax, exponents[j - 1]);
    rhs(i) = values[i];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(rhs);
  std::vector<double> out(cols);
  out[0] = c(0);
  for (Eigen::Index j = 1; j < cols; ++j) out[j] = c(j) / std::pow(xmax, exponents[j - 1]);
  return out;
}

double power_fit_residual(std::span<const double> x, std::span<const double> values,
                          std::span<const double> exponents, std::span<const double> coeffs) {
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double model = coeffs[0];
    for (std::size_t j = 0; j < exponents.size(); ++j)
      model += coeffs[j + 1] * std::pow(x[i], exponents[j]);
    ss += (values[i] - model) * (values[i] - model);
  }
  return std::sqrt(ss / static_cast<double>(x.size()));
}

unsigned thread_count() {
  if (const char* env = std::getenv("FRACLAP_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fraclap::numerics
