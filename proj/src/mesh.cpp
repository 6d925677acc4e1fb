#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fraclap/errors.hpp"
#include "fraclap/numerics.hpp"
#include "manifold_impl.hpp"

namespace fraclap {

namespace {

using numerics::kPi;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

struct OffMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

OffMesh parse_off(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw DomainError("OFF: unexpected end of input");
    return tokens[pos++];
  };
  auto next_number = [&]() {
    const std::string& t = next();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw DomainError("OFF: malformed number '" + t + "'");
      return v;
    } catch (const std::logic_error&) {
      throw DomainError("OFF: malformed number '" + t + "'");
    }
  };
  if (next() != "OFF") throw DomainError("OFF: missing 'OFF' header");
  const double nv = next_number(), nf = next_number();
  next_number();
  if (nv < 3 || nf < 1 || nv != std::floor(nv) || nf != std::floor(nf))
    throw DomainError("OFF: invalid vertex/face counts");
  OffMesh mesh;
  mesh.vertices.resize(static_cast<std::size_t>(nv));
  for (auto& v : mesh.vertices)
    for (double& c : v) c = next_number();
  mesh.faces.resize(static_cast<std::size_t>(nf));
  for (auto& f : mesh.faces) {
    if (next_number() != 3) throw GeometryError("OFF: only triangle faces are supported");
    for (int& idx : f) {
      const double v = next_number();
      if (v < 0 || v >= nv || v != std::floor(v)) throw DomainError("OFF: face index out of range");
      idx = static_cast<int>(v);
    }
  }
  return mesh;
}

void check_topology(const OffMesh& mesh) {
  std::map<std::pair<int, int>, int> directed;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw GeometryError("mesh: face " + std::to_string(f) + " repeats a vertex");
    for (int e = 0; e < 3; ++e) ++directed[{t[e], t[(e + 1) % 3]}];
  }
  for (const auto& [edge, count] : directed) {
    const auto twin = directed.find({edge.second, edge.first});
    const int opposite = twin == directed.end() ? 0 : twin->second;
    if (count + opposite < 2)
      throw TopologyError("mesh: boundary edge (" + std::to_string(edge.first) + ", " +
                          std::to_string(edge.second) + ")");
    if (count + opposite > 2)
      throw TopologyError("mesh: non-manifold edge (" + std::to_string(edge.first) + ", " +
                          std::to_string(edge.second) + ")");
    if (count != 1)
      throw TopologyError("mesh: inconsistent face orientation at edge (" +
                          std::to_string(edge.first) + ", " + std::to_string(edge.second) + ")");
  }
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.faces)
    for (int v : t) used[v] = 1;
  if (std::find(used.begin(), used.end(), 0) != used.end())
    throw TopologyError("mesh: isolated vertex");
}

class MeshImpl final : public detail::ManifoldImpl {
 public:
  MeshImpl(OffMesh mesh, std::size_t k_max, double curvature)
      : faces_(std::move(mesh.faces)) {
    dim = 2;
    kind = ManifoldKind::mesh;
    nodes = std::move(mesh.vertices);
    descriptor = MeshDescriptor{nodes.size(), faces_.size()};
    curvature_bound = curvature;
    const std::size_t nv = nodes.size();
    if (k_max > nv)
      throw CapacityError("build_mesh: k_max=" + std::to_string(k_max) + " exceeds vertex count " +
                          std::to_string(nv));

    std::vector<double> areas(faces_.size());
    double total_area = 0.0;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      const auto& t = faces_[f];
      areas[f] = 0.5 * norm(cross(sub(nodes[t[1]], nodes[t[0]]), sub(nodes[t[2]], nodes[t[0]])));
      total_area += areas[f];
    }
    const double mean_area = total_area / static_cast<double>(faces_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f)
      if (!(areas[f] > 1e-10 * mean_area))
        throw GeometryError("mesh: degenerate triangle " + std::to_string(f));

    weights.assign(nv, 0.0);
    normals_.assign(nv, Vec3{0.0, 0.0, 0.0});
    incident_.resize(nv);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      const auto& t = faces_[f];
      const Vec3 nrm = cross(sub(nodes[t[1]], nodes[t[0]]), sub(nodes[t[2]], nodes[t[0]]));
      for (int a = 0; a < 3; ++a) {
        weights[t[a]] += areas[f] / 3.0;
        for (int c = 0; c < 3; ++c) normals_[t[a]][c] += nrm[c];
        incident_[t[a]].push_back(f);
        // Cotangent of the angle at vertex a weights the opposite edge.
        const int i = t[(a + 1) % 3], j = t[(a + 2) % 3];
        const Vec3 u = sub(nodes[i], nodes[t[a]]), v = sub(nodes[j], nodes[t[a]]);
        const double cot = dot(u, v) / norm(cross(u, v));
        trip.emplace_back(i, j, -0.5 * cot);
        trip.emplace_back(j, i, -0.5 * cot);
        trip.emplace_back(i, i, 0.5 * cot);
        trip.emplace_back(j, j, 0.5 * cot);
      }
    }
    volume = 0.0;
    for (double w : weights) volume += w;
    for (auto& n : normals_) {
      const double l = norm(n);
      for (double& c : n) c /= l;
    }

    neighbors_.resize(nv);
    for (const auto& t : faces_)
      for (int a = 0; a < 3; ++a) {
        const int i = t[a], j = t[(a + 1) % 3];
        const double len = norm(sub(nodes[i], nodes[j]));
        neighbors_[i].emplace_back(j, len);
        neighbors_[j].emplace_back(i, len);
      }
    for (auto& nb : neighbors_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               nb.end());
    }

    Eigen::SparseMatrix<double> stiffness(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nv));
    stiffness.setFromTriplets(trip.begin(), trip.end());
    solve_eigenpairs(stiffness, k_max);

    double ecc = 0.0;
    for (double d : dijkstra(0)) ecc = std::max(ecc, d);
    injectivity_radius = curvature > 0.0 ? std::min(kPi / std::sqrt(curvature), ecc) : ecc;
  }

  double eigenfunction(std::size_t k, std::size_t i) const override {
    return vectors_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }

  Vec3 eigenfunction_gradient(std::size_t k, std::size_t i) const override {
    // Area-weighted average of the piecewise-linear gradient over incident faces.
    Vec3 g{0.0, 0.0, 0.0};
    double wsum = 0.0;
    for (std::size_t f : incident_[i]) {
      const auto& t = faces_[f];
      const Vec3 nrm = cross(sub(nodes[t[1]], nodes[t[0]]), sub(nodes[t[2]], nodes[t[0]]));
      const double a2 = norm(nrm);
      for (int a = 0; a < 3; ++a) {
        const Vec3 edge = sub(nodes[t[(a + 2) % 3]], nodes[t[(a + 1) % 3]]);
        const Vec3 grad_hat = cross(nrm, edge);
        const double val = eigenfunction(k, t[a]);
        for (int c = 0; c < 3; ++c) g[c] += 0.5 * val * grad_hat[c] / a2;
      }
      wsum += 0.5 * a2;
    }
    for (double& c : g) c /= wsum;
    const auto [e1, e2] = frame(i);
    return {dot(g, e1), dot(g, e2), 0.0};
  }

  double distance(std::size_t p, std::size_t q) const override {
    if (p == q) return 0.0;
    const std::size_t a = std::min(p, q), b = std::max(p, q);
    return row(a)[b];
  }

  Vec3 displacement(std::size_t p, std::size_t q) const override {
    const Vec3 chord = sub(nodes[q], nodes[p]);
    const auto [e1, e2] = frame(p);
    const double x = dot(chord, e1), y = dot(chord, e2);
    const double l = std::hypot(x, y);
    if (l == 0.0) return {0.0, 0.0, 0.0};
    const double d = distance(p, q);
    return {d * x / l, d * y / l, 0.0};
  }

  Vec3 cell_size(std::size_t p) const override {
    const double h = std::sqrt(weights[p]);
    return {h, h, 0.0};
  }

 private:
  std::vector<std::array<int, 3>> faces_;
  std::vector<Vec3> normals_;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<std::vector<std::pair<int, double>>> neighbors_;
  Eigen::MatrixXd vectors_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::size_t, std::shared_ptr<const std::vector<double>>> rows_;

  std::pair<Vec3, Vec3> frame(std::size_t i) const {
    const Vec3& n = normals_[i];
    const Vec3 seed = std::abs(n[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    Vec3 e1 = cross(n, seed);
    const double l = norm(e1);
    for (double& c : e1) c /= l;
    return {e1, cross(n, e1)};
  }

  std::vector<double> dijkstra(std::size_t src) const {
    std::vector<double> dist(nodes.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.emplace(0.0, static_cast<int>(src));
    while (!pq.empty()) {
      const auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[v]) continue;
      for (const auto& [w, len] : neighbors_[v])
        if (d + len < dist[w]) {
          dist[w] = d + len;
          pq.emplace(dist[w], w);
        }
    }
    return dist;
  }

  const std::vector<double>& row(std::size_t p) const {
    {
      std::lock_guard lock(cache_mutex_);
      const auto it = rows_.find(p);
      if (it != rows_.end()) return *it->second;
    }
    auto computed = std::make_shared<const std::vector<double>>(dijkstra(p));
    std::lock_guard lock(cache_mutex_);
    return *rows_.emplace(p, std::move(computed)).first->second;
  }

  // Shift-invert subspace iteration on A = M^{-1/2} L M^{-1/2} in the
  // complement of the constant mode, which is inserted exactly.
  void solve_eigenpairs(const Eigen::SparseMatrix<double>& stiffness, std::size_t k_max) {
    const Eigen::Index nv = static_cast<Eigen::Index>(nodes.size());
    Eigen::VectorXd msqrt(nv), minv_sqrt(nv);
    for (Eigen::Index i = 0; i < nv; ++i) {
      msqrt(i) = std::sqrt(weights[i]);
      minv_sqrt(i) = 1.0 / msqrt(i);
    }
    Eigen::SparseMatrix<double> a = minv_sqrt.asDiagonal() * stiffness * minv_sqrt.asDiagonal();
    const Eigen::VectorXd c0 = msqrt / std::sqrt(volume);

    eigenvalues.assign(1, 0.0);
    vectors_.resize(nv, static_cast<Eigen::Index>(k_max));
    vectors_.col(0).setConstant(1.0 / std::sqrt(volume));
    const Eigen::Index want = static_cast<Eigen::Index>(k_max) - 1;
    if (want <= 0) return;

    // Shift below zero keeps the operator positive definite.
    const double mean_diag = a.diagonal().mean();
    const double tau = 1e-2 * mean_diag * std::pow(static_cast<double>(nv), -1.0);
    Eigen::SparseMatrix<double> shifted = a;
    for (Eigen::Index i = 0; i < nv; ++i) shifted.coeffRef(i, i) += tau;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success) throw GeometryError("mesh: stiffness factorization failed");

    const Eigen::Index block = std::min<Eigen::Index>(nv - 1, std::max<Eigen::Index>(2 * want, want + 8));
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(nv, block);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    auto deflate = [&](Eigen::MatrixXd& y) { y -= c0 * (c0.transpose() * y); };

    Eigen::VectorXd theta;
    Eigen::MatrixXd ritz;
    for (int it = 0; it < 2000; ++it) {
      deflate(x);
      Eigen::MatrixXd y = solver.solve(x);
      deflate(y);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(nv, block);
      deflate(q);
      Eigen::MatrixXd aq = a * q;
      Eigen::MatrixXd h = q.transpose() * aq;
      h = 0.5 * (h + h.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      theta = es.eigenvalues();
      ritz = q * es.eigenvectors();
      const Eigen::MatrixXd ar = aq * es.eigenvectors();
      double worst = 0.0;
      for (Eigen::Index j = 0; j < want; ++j) {
        const double res = (ar.col(j) - theta(j) * ritz.col(j)).norm();
        worst = std::max(worst, res / std::max(theta(j), 1e-300));
      }
      x = ritz;
      if (worst < 1e-10) break;
    }
    // Final orthonormalization against the constant mode keeps the Gram exact.
    Eigen::MatrixXd basis(nv, want + 1);
    basis.col(0) = c0;
    basis.rightCols(want) = ritz.leftCols(want);
    for (Eigen::Index j = 1; j <= want; ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i)
          basis.col(j) -= basis.col(i).dot(basis.col(j)) * basis.col(i);
      basis.col(j).normalize();
    }
    for (Eigen::Index j = 1; j <= want; ++j) {
      vectors_.col(j) = minv_sqrt.asDiagonal() * basis.col(j);
      eigenvalues.push_back(std::max(0.0, theta(j - 1)));
    }
  }
};

}  // namespace

SpectralManifold build_mesh(std::string_view off_content, std::size_t k_max,
                            double curvature_bound) {
  if (k_max < 1) throw DomainError("build_mesh: k_max must be at least 1");
  if (!(curvature_bound >= 0.0)) throw DomainError("build_mesh: curvature_bound must be >= 0");
  OffMesh mesh = parse_off(off_content);
  check_topology(mesh);
  return SpectralManifold(std::make_shared<MeshImpl>(std::move(mesh), k_max, curvature_bound));
}

std::string icosphere_off(int subdivisions, double radius) {
  if (subdivisions < 0) throw DomainError("icosphere_off: subdivisions must be >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  auto project = [](Vec3 p) {
    const double l = norm(p);
    return Vec3{p[0] / l, p[1] / l, p[2] / l};
  };
  for (auto& p : v) p = project(p);
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back(project({0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1]),
                           0.5 * (v[a][2] + v[b][2])}));
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]),
                c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  std::string out = "OFF\n" + std::to_string(v.size()) + " " + std::to_string(f.size()) + " " +
                    std::to_string(v.size() + f.size() - 2) + "\n";
  char buf[128];
  for (const auto& p : v) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", radius * p[0], radius * p[1],
                  radius * p[2]);
    out += buf;
  }
  for (const auto& tri : f) {
    std::snprintf(buf, sizeof buf, "3 %d %d %d\n", tri[0], tri[1], tri[2]);
    out += buf;
  }
  return out;
}

}  // namespace fraclap
