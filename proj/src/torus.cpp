#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"
#include "manifold_impl.hpp"

namespace fraclap {

namespace {

using numerics::kPi;
using Index = std::array<int, 3>;

double wrap_centered(double x, double L) {
  x = std::fmod(x, L);
  if (x < -0.5 * L) x += L;
  if (x >= 0.5 * L) x -= L;
  return x;
}

// Applies a (rows x cols) matrix along one axis of a row-major tensor.
std::vector<double> apply_axis(const std::vector<double>& in, const std::vector<int>& shape,
                               int axis, const std::vector<double>& mat, int rows) {
  const int cols = shape[axis];
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  std::vector<double> out(outer * rows * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (int j = 0; j < rows; ++j) {
      double* dst = &out[(o * rows + j) * inner];
      for (int i = 0; i < cols; ++i) {
        const double a = mat[static_cast<std::size_t>(j) * cols + i];
        if (a == 0.0) continue;
        const double* src = &in[(o * cols + i) * inner];
        for (std::size_t r = 0; r < inner; ++r) dst[r] += a * src[r];
      }
    }
  return out;
}

class TorusImpl final : public detail::ManifoldImpl {
 public:
  TorusImpl(int n, std::vector<double> lengths, std::vector<int> grid, std::size_t k_max) {
    dim = n;
    kind = ManifoldKind::torus;
    descriptor = TorusDescriptor{lengths, grid};
    L_ = std::move(lengths);
    N_ = std::move(grid);
    curvature_bound = 0.0;

    std::size_t node_total = 1, capacity = 1;
    volume = 1.0;
    for (int d = 0; d < n; ++d) {
      h_.push_back(L_[d] / N_[d]);
      M_.push_back((N_[d] - 1) / 2);
      node_total *= N_[d];
      capacity *= 2 * M_[d] + 1;
      volume *= L_[d];
    }
    if (k_max > capacity)
      throw CapacityError("build_torus: k_max=" + std::to_string(k_max) +
                          " exceeds the resolvable mode count " + std::to_string(capacity));
    injectivity_radius = 0.5 * *std::min_element(L_.begin(), L_.end());

    stride_.assign(n, 1);
    for (int d = n - 2; d >= 0; --d) stride_[d] = stride_[d + 1] * N_[d + 1];
    nodes.resize(node_total);
    weights.assign(node_total, volume / static_cast<double>(node_total));
    for (std::size_t i = 0; i < node_total; ++i) {
      Vec3 x{0.0, 0.0, 0.0};
      for (int d = 0; d < n; ++d) x[d] = axis_index(i, d) * h_[d];
      nodes[i] = x;
    }

    enumerate_modes(k_max);
    build_axis_tables();
    build_groups();
  }

  double eigenfunction(std::size_t k, std::size_t i) const override {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= basis_[d][mode_slot(k, d) * N_[d] + axis_index(i, d)];
    return v;
  }

  Vec3 eigenfunction_gradient(std::size_t k, std::size_t i) const override {
    Vec3 g{0.0, 0.0, 0.0};
    for (int e = 0; e < dim; ++e) {
      double v = 1.0;
      for (int d = 0; d < dim; ++d) {
        const std::size_t idx = mode_slot(k, d) * N_[d] + axis_index(i, d);
        v *= d == e ? deriv_[d][idx] : basis_[d][idx];
      }
      g[e] = v;
    }
    return g;
  }

  std::vector<double> project(std::span<const double> values) const override {
    std::vector<double> t(values.begin(), values.end());
    std::vector<int> shape(N_.begin(), N_.end());
    for (int d = 0; d < dim; ++d) {
      std::vector<double> fwd(basis_[d]);
      for (double& v : fwd) v *= h_[d];
      t = apply_axis(t, shape, d, fwd, 2 * M_[d] + 1);
      shape[d] = 2 * M_[d] + 1;
    }
    std::vector<double> c(modes_.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = t[coeff_offset(k)];
    return c;
  }

  std::vector<double> synthesize(std::span<const double> coeffs) const override {
    return synthesize_with(coeffs, -1);
  }

  std::vector<Vec3> synthesize_gradient(std::span<const double> coeffs) const override {
    std::vector<Vec3> g(nodes.size(), Vec3{0.0, 0.0, 0.0});
    for (int e = 0; e < dim; ++e) {
      const auto comp = synthesize_with(coeffs, e);
      for (std::size_t i = 0; i < g.size(); ++i) g[i][e] = comp[i];
    }
    return g;
  }

  double evaluate_at(const Vec3& x, std::span<const double> coeffs) const override {
    double sum = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      if (coeffs[k] == 0.0) continue;
      double v = coeffs[k];
      for (int d = 0; d < dim; ++d) v *= fourier(modes_[k][d], x[d], L_[d]);
      sum += v;
    }
    return sum;
  }

  double modal_sum(std::size_t p, std::size_t q, std::span<const double> w) const override {
    if (!translation_invariant_) return ManifoldImpl::modal_sum(p, q, w);
    std::array<int, 3> delta{0, 0, 0};
    for (int d = 0; d < dim; ++d)
      delta[d] = ((axis_index(q, d) - axis_index(p, d)) % N_[d] + N_[d]) % N_[d];
    double sum = 0.0;
    for (const auto& g : groups_) {
      const double wk = w[g.representative];
      if (wk == 0.0) continue;
      double v = wk;
      for (int d = 0; d < dim; ++d) v *= cos_table_[d][g.abs_m[d] * N_[d] + delta[d]];
      sum += v;
    }
    return sum;
  }

  double modal_sum_points(const Vec3& x, const Vec3& y, std::span<const double> w) const override {
    if (!translation_invariant_) {
      double sum = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] == 0.0) continue;
        double a = 1.0, b = 1.0;
        for (int d = 0; d < dim; ++d) {
          a *= fourier(modes_[k][d], x[d], L_[d]);
          b *= fourier(modes_[k][d], y[d], L_[d]);
        }
        sum += w[k] * a * b;
      }
      return sum;
    }
    double sum = 0.0;
    for (const auto& g : groups_) {
      const double wk = w[g.representative];
      if (wk == 0.0) continue;
      double v = wk;
      for (int d = 0; d < dim; ++d) {
        const int m = g.abs_m[d];
        v *= (m == 0 ? 1.0 : 2.0) / L_[d] * std::cos(2.0 * kPi * m * (y[d] - x[d]) / L_[d]);
      }
      sum += v;
    }
    return sum;
  }

  double distance(std::size_t p, std::size_t q) const override {
    const Vec3 d = displacement(p, q);
    return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  }

  double point_distance(const Vec3& x, const Vec3& y) const override {
    double ss = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double r = wrap_centered(y[d] - x[d], L_[d]);
      ss += r * r;
    }
    return std::sqrt(ss);
  }

  Vec3 displacement(std::size_t p, std::size_t q) const override {
    Vec3 r{0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) {
      int di = axis_index(q, d) - axis_index(p, d);
      if (di < 0) di += N_[d];
      if (2 * di >= N_[d]) di -= N_[d];
      r[d] = di * h_[d];
    }
    return r;
  }

  Vec3 cell_size(std::size_t) const override {
    Vec3 c{0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) c[d] = h_[d];
    return c;
  }

  Vec3 point_along(std::size_t p, const Vec3& direction, double dist) const override {
    Vec3 x = nodes[p];
    for (int d = 0; d < dim; ++d) {
      x[d] = std::fmod(x[d] + dist * direction[d], L_[d]);
      if (x[d] < 0.0) x[d] += L_[d];
    }
    return x;
  }

  std::size_t row_representative(std::size_t p) const override {
    return translation_invariant_ ? 0 : p;
  }

  std::size_t equivalent_column(std::size_t p, std::size_t q) const override {
    if (!translation_invariant_) return q;
    std::size_t idx = 0;
    for (int d = 0; d < dim; ++d) {
      const int di = ((axis_index(q, d) - axis_index(p, d)) % N_[d] + N_[d]) % N_[d];
      idx += static_cast<std::size_t>(di) * stride_[d];
    }
    return idx;
  }

 private:
  struct Group {
    Index abs_m{0, 0, 0};
    std::size_t representative = 0;
  };

  std::vector<double> L_, h_;
  std::vector<int> N_, M_;
  std::vector<std::size_t> stride_;
  std::vector<Index> modes_;
  std::vector<std::vector<double>> basis_, deriv_, cos_table_;
  std::vector<Group> groups_;
  bool translation_invariant_ = false;

  int axis_index(std::size_t i, int d) const {
    return static_cast<int>((i / stride_[d]) % static_cast<std::size_t>(N_[d]));
  }

  std::size_t mode_slot(std::size_t k, int d) const {
    return static_cast<std::size_t>(modes_[k][d] + M_[d]);
  }

  std::size_t coeff_offset(std::size_t k) const {
    std::size_t off = 0;
    for (int d = 0; d < dim; ++d) off = off * (2 * M_[d] + 1) + mode_slot(k, d);
    return off;
  }

  // Real Fourier function: m = 0 constant, m > 0 cosine, m < 0 sine.
  static double fourier(int m, double x, double L) {
    if (m == 0) return 1.0 / std::sqrt(L);
    const double a = 2.0 * kPi * std::abs(m) / L;
    return std::sqrt(2.0 / L) * (m > 0 ? std::cos(a * x) : std::sin(a * x));
  }

  static double fourier_derivative(int m, double x, double L) {
    if (m == 0) return 0.0;
    const double a = 2.0 * kPi * std::abs(m) / L;
    return std::sqrt(2.0 / L) * a * (m > 0 ? -std::sin(a * x) : std::cos(a * x));
  }

  double mode_lambda(const Index& m) const {
    double lam = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double a = 2.0 * kPi * m[d] / L_[d];
      lam += a * a;
    }
    return lam;
  }

  void enumerate_modes(std::size_t k_max) {
    std::vector<Index> all;
    Index m{0, 0, 0};
    std::function<void(int)> rec = [&](int d) {
      if (d == dim) {
        all.push_back(m);
        return;
      }
      for (int v = -M_[d]; v <= M_[d]; ++v) {
        m[d] = v;
        rec(d + 1);
      }
      m[d] = 0;
    };
    rec(0);
    std::vector<std::pair<double, Index>> keyed;
    keyed.reserve(all.size());
    for (const auto& a : all) keyed.emplace_back(mode_lambda(a), a);
    // Exact lambda ties are compared with a relative tolerance so that the
    // lexicographic tie-break is not decided by rounding.
    std::stable_sort(keyed.begin(), keyed.end(), [this](const auto& a, const auto& b) {
      const double scale = std::max({1.0, a.first, b.first});
      if (std::abs(a.first - b.first) > 1e-12 * scale) return a.first < b.first;
      for (int d = 0; d < dim; ++d) {
        const int x = std::abs(a.second[d]), y = std::abs(b.second[d]);
        if (x != y) return x < y;
      }
      for (int d = 0; d < dim; ++d)
        if (a.second[d] != b.second[d]) return a.second[d] > b.second[d];
      return false;
    });
    for (std::size_t k = 0; k < k_max; ++k) {
      modes_.push_back(keyed[k].second);
      eigenvalues.push_back(keyed[k].first);
    }
  }

  void build_axis_tables() {
    basis_.resize(dim);
    deriv_.resize(dim);
    cos_table_.resize(dim);
    for (int d = 0; d < dim; ++d) {
      const int count = 2 * M_[d] + 1;
      basis_[d].resize(static_cast<std::size_t>(count) * N_[d]);
      deriv_[d].resize(basis_[d].size());
      for (int j = 0; j < count; ++j)
        for (int i = 0; i < N_[d]; ++i) {
          const double x = i * h_[d];
          basis_[d][j * N_[d] + i] = fourier(j - M_[d], x, L_[d]);
          deriv_[d][j * N_[d] + i] = fourier_derivative(j - M_[d], x, L_[d]);
        }
      cos_table_[d].resize(static_cast<std::size_t>(M_[d] + 1) * N_[d]);
      for (int m = 0; m <= M_[d]; ++m)
        for (int i = 0; i < N_[d]; ++i)
          cos_table_[d][m * N_[d] + i] =
              (m == 0 ? 1.0 : 2.0) / L_[d] * std::cos(2.0 * kPi * m * i / N_[d]);
    }
  }

  // Modes sharing |m| form a group whose sum collapses to a product of cosines
  // of the displacement, provided truncation kept the whole group.
  void build_groups() {
    std::map<Index, std::pair<std::size_t, int>> seen;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      Index a{0, 0, 0};
      for (int d = 0; d < dim; ++d) a[d] = std::abs(modes_[k][d]);
      auto [it, inserted] = seen.emplace(a, std::make_pair(k, 0));
      it->second.second += 1;
    }
    translation_invariant_ = true;
    for (const auto& [a, info] : seen) {
      int expected = 1;
      for (int d = 0; d < dim; ++d)
        if (a[d] != 0) expected *= 2;
      if (info.second != expected) translation_invariant_ = false;
      groups_.push_back(Group{a, info.first});
    }
    std::sort(groups_.begin(), groups_.end(),
              [](const Group& x, const Group& y) { return x.representative < y.representative; });
  }

  std::vector<double> synthesize_with(std::span<const double> coeffs, int deriv_axis) const {
    std::vector<int> shape(dim);
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) {
      shape[d] = 2 * M_[d] + 1;
      total *= shape[d];
    }
    std::vector<double> t(total, 0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k) t[coeff_offset(k)] = coeffs[k];
    for (int d = 0; d < dim; ++d) {
      const int count = shape[d];
      const auto& src = d == deriv_axis ? deriv_[d] : basis_[d];
      std::vector<double> inv(static_cast<std::size_t>(N_[d]) * count);
      for (int i = 0; i < N_[d]; ++i)
        for (int j = 0; j < count; ++j) inv[i * count + j] = src[j * N_[d] + i];
      t = apply_axis(t, shape, d, inv, N_[d]);
      shape[d] = N_[d];
    }
    return t;
  }
};

}  // namespace

SpectralManifold build_torus(int dim, std::vector<double> lengths, std::vector<int> grid,
                             std::size_t k_max) {
  if (dim < 1 || dim > 3) throw DomainError("build_torus: dimension must be 1, 2 or 3");
  if (static_cast<int>(lengths.size()) != dim || static_cast<int>(grid.size()) != dim)
    throw DomainError("build_torus: lengths and grid must have one entry per axis");
  for (double L : lengths)
    if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("build_torus: lengths must be positive");
  for (int g : grid)
    if (g < 4) throw DomainError("build_torus: grid must have at least 4 points per axis");
  if (k_max < 1) throw DomainError("build_torus: k_max must be at least 1");
  return SpectralManifold(
      std::make_shared<TorusImpl>(dim, std::move(lengths), std::move(grid), k_max));
}

}  // namespace fraclap
