#include "experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "fraclap/errors.hpp"
#include "fraclap/extension.hpp"
#include "fraclap/fracops.hpp"
#include "fraclap/heat.hpp"
#include "fraclap/kernel.hpp"
#include "fraclap/monotonicity.hpp"
#include "fraclap/numerics.hpp"
#include "fraclap/report.hpp"

#ifndef FRACLAP_VERSION
#define FRACLAP_VERSION "0.0.0"
#endif

namespace fraclap::cli {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"eigs",      "heat",      "kernel",       "fraclap",
                                              "seminorm",  "perimeter", "extension",    "monotonicity",
                                              "pv_equivalence", "scaling", "defect"};
  return names;
}

json ExperimentConfig::canonical() const {
  return {{"experiment", experiment},
          {"manifold", manifold},
          {"frac", {{"s", s}, {"points_per_unit", points_per_unit}}},
          {"options", options}};
}

json preset_manifold(const std::string& name) {
  const double tau = 2.0 * numerics::kPi;
  if (name == "torus1d") return {{"kind", "torus"}, {"lengths", {tau}}, {"grid", {1024}}};
  if (name == "torus2d") return {{"kind", "torus"}, {"lengths", {tau, tau}}, {"grid", {64, 64}}};
  if (name == "sphere") return {{"kind", "sphere"}, {"radius", 1.0}, {"l_max", 24}, {"nodes_per_band", 50}};
  if (name == "icosphere")
    return {{"kind", "mesh"}, {"icosphere", 3}, {"modes", 120}, {"curvature_bound", 1.0}};
  throw ConfigError("unknown manifold preset '" + name + "'");
}

namespace {

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

template <typename T>
T opt(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("options: bad value for '") + key + "'");
  }
}

void validate_manifold(const json& m) {
  const auto kind = get<std::string>(m, "kind", "manifold");
  if (kind == "torus") {
    only_keys(m, {"kind", "lengths", "grid", "modes"}, "manifold");
    const auto L = get<std::vector<double>>(m, "lengths", "manifold");
    const auto g = get<std::vector<int>>(m, "grid", "manifold");
    if (L.empty() || L.size() > 3 || L.size() != g.size()) throw ConfigError("manifold: lengths/grid mismatch");
    for (double l : L)
      if (!(l > 0)) throw ConfigError("manifold: lengths must be positive");
    for (int n : g)
      if (n < 2) throw ConfigError("manifold: grid must be >= 2");
  } else if (kind == "sphere") {
    only_keys(m, {"kind", "radius", "l_max", "nodes_per_band", "bands"}, "manifold");
    if (!(get<double>(m, "radius", "manifold") > 0)) throw ConfigError("manifold: radius must be positive");
    if (get<int>(m, "l_max", "manifold") < 1) throw ConfigError("manifold: l_max must be >= 1");
    if (get<int>(m, "nodes_per_band", "manifold") < 2) throw ConfigError("manifold: nodes_per_band too small");
  } else if (kind == "mesh") {
    only_keys(m, {"kind", "icosphere", "off", "modes", "curvature_bound"}, "manifold");
    if (m.contains("icosphere") == m.contains("off"))
      throw ConfigError("manifold: mesh needs exactly one of 'icosphere' or 'off'");
    if (get<int>(m, "modes", "manifold") < 2) throw ConfigError("manifold: modes must be >= 2");
  } else {
    throw ConfigError("manifold: unknown kind '" + kind + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  only_keys(j, {"experiment", "manifold", "frac", "options", "out", "golden"}, "config");
  ExperimentConfig cfg;
  cfg.experiment = get<std::string>(j, "experiment", "config");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  cfg.manifold = j.contains("manifold") ? j["manifold"] : preset_manifold("torus1d");
  validate_manifold(cfg.manifold);
  const json frac = j.value("frac", json::object());
  only_keys(frac, {"s", "points_per_unit"}, "frac");
  cfg.s = frac.contains("s") ? get<std::vector<double>>(frac, "s", "frac") : std::vector<double>{0.5};
  if (cfg.s.empty()) throw ConfigError("frac: s list is empty");
  const bool perimeter = cfg.experiment == "perimeter";
  for (double s : cfg.s) {
    if (!(s > 0.0 && s < 2.0)) throw ConfigError("frac: s = " + format_number(s) + " outside (0, 2)");
    if (perimeter && !(s < 1.0)) throw ConfigError("frac: perimeter needs s in (0, 1)");
  }
  cfg.points_per_unit = frac.value("points_per_unit", 16);
  if (cfg.points_per_unit < 4) throw ConfigError("frac: points_per_unit must be >= 4");
  cfg.options = j.value("options", json::object());
  if (!cfg.options.is_object()) throw ConfigError("options must be an object");
  if (j.contains("out")) cfg.out = get<std::string>(j, "out", "config");
  if (j.contains("golden")) cfg.golden = get<std::string>(j, "golden", "config");
  return cfg;
}

SpectralManifold build_manifold(const json& m) {
  validate_manifold(m);
  const auto kind = m["kind"].get<std::string>();
  if (kind == "torus") {
    const auto L = m["lengths"].get<std::vector<double>>();
    const auto g = m["grid"].get<std::vector<int>>();
    std::size_t cap = 1;
    for (int n : g) cap *= n % 2 == 0 ? n - 1 : n;
    return build_torus(static_cast<int>(L.size()), L, g, m.value("modes", cap));
  }
  if (kind == "sphere")
    return build_sphere(m["radius"].get<double>(), m["l_max"].get<int>(), m["nodes_per_band"].get<int>(),
                        m.value("bands", 0));
  const std::string off = m.contains("icosphere") ? icosphere_off(m["icosphere"].get<int>())
                                                  : read_file(m["off"].get<std::string>());
  return build_mesh(off, m["modes"].get<std::size_t>(), m.value("curvature_bound", 1.0));
}

namespace {

// Torus coordinates are rescaled to angles; other manifolds use the embedding.
Vec3 angles(const SpectralManifold& m, const Vec3& x) {
  Vec3 a = x;
  if (m.kind() == ManifoldKind::torus) {
    const auto& L = std::get<TorusDescriptor>(m.descriptor()).lengths;
    for (std::size_t d = 0; d < L.size(); ++d) a[d] = 2.0 * numerics::kPi * x[d] / L[d];
  }
  return a;
}

double extent(const SpectralManifold& m) {
  double r = 0.0;
  for (const auto& x : m.nodes()) r = std::max(r, std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
  return r;
}

Field named_field(const SpectralManifold& m, const json& spec, const std::string& fallback) {
  if (spec.is_object()) {
    if (!spec.contains("csv")) throw ConfigError("options.field: object form needs 'csv'");
    return field_from_table(m, parse_csv(read_file(spec["csv"].get<std::string>())));
  }
  const std::string name = spec.is_string() ? spec.get<std::string>() : fallback;
  const bool torus = m.kind() == ManifoldKind::torus;
  const double R = torus ? 1.0 : extent(m);
  if (name == "constant") return sample(m, [](const Vec3&) { return 1.0; });
  if (name == "smooth") {
    if (torus && m.dim() == 1)
      return sample(m, [&](const Vec3& x) { const double a = angles(m, x)[0]; return std::cos(a) + 0.3 * std::cos(3 * a); });
    if (torus)
      return sample(m, [&](const Vec3& x) {
        const Vec3 a = angles(m, x);
        return std::sin(a[0]) * std::cos(a[1]) + 0.5 * std::cos(2 * a[1]) + 0.2 * std::sin(a[0] + a[1]);
      });
    return sample(m, [&](const Vec3& x) { return std::exp(x[0] / R) + x[1] * x[2] / (R * R); });
  }
  if (name == "strip" || name == "strip_set") {
    if (!torus) throw ConfigError("field '" + name + "' needs a torus");
    const double lo = name == "strip" ? -1.0 : 0.0;
    return sample(m, [&](const Vec3& x) {
      const double a = angles(m, x)[0];
      return a >= numerics::kPi / 2 && a < 1.5 * numerics::kPi ? 1.0 : lo;
    });
  }
  if (name == "cap" || name == "cap_set") {
    const double lo = name == "cap" ? -1.0 : 0.0;
    if (torus) throw ConfigError("field '" + name + "' needs a sphere or mesh");
    return sample(m, [&](const Vec3& x) { return x[2] > 0 ? 1.0 : lo; });
  }
  throw ConfigError("unknown field '" + name + "'");
}

std::size_t nearest_node(const SpectralManifold& m, const Vec3& x) {
  std::size_t best = 0;
  double bd = 1e300;
  for (std::size_t p = 0; p < m.node_count(); ++p) {
    const double d = m.point_distance(m.nodes()[p], x);
    if (d < bd) {
      bd = d;
      best = p;
    }
  }
  return best;
}

// Shortest round-trip text, for JSON keys.
std::string key(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

double sup_abs(const std::vector<double>& a) {
  double r = 0.0;
  for (double v : a) r = std::max(r, std::abs(v));
  return r;
}

struct Context {
  const ExperimentConfig& cfg;
  SpectralManifold m;
  RunResult& out;
  std::vector<std::string> quad_digests;

  SubordinationQuadrature quad(const FracParams& p) {
    auto q = default_quadrature(m, p);
    q.points_per_unit = cfg.points_per_unit;
    quad_digests.push_back(q.digest());
    return q;
  }
  void table(const std::string& name, const Table& t) {
    out.files[name] = to_csv(t);
    out.summary["files"][name] = t.columns;
  }
  void fail(const std::string& why) {
    out.status = kAcceptanceFailure;
    out.message += (out.message.empty() ? "" : "; ") + why;
  }
};

void eigs(Context& c) {
  Table t{{"k", "lambda"}, {}};
  const auto& ev = c.m.eigenvalues();
  for (std::size_t k = 0; k < ev.size(); ++k) t.add({double(k), ev[k]});
  c.table("eigs.csv", t);
  c.out.summary["gram_deviation"] = c.m.gram_deviation();
  c.out.summary["modes"] = ev.size();
}

void heat(Context& c) {
  const auto times = opt<std::vector<double>>(c.cfg.options, "times", {1e-3, 1e-2, 0.1, 1.0});
  const auto p = opt<std::size_t>(c.cfg.options, "node", 0);
  const auto targets = opt<std::size_t>(c.cfg.options, "targets", 8);
  if (p >= c.m.node_count()) throw ConfigError("options.node out of range");
  HeatEvaluator h(c.m);
  Table t{{"t", "q", "d", "H", "reliable", "images"}, {}};
  const bool torus = c.m.kind() == ManifoldKind::torus;
  for (double time : times) {
    if (!(time > 0)) throw ConfigError("options.times must be positive");
    for (std::size_t i = 0; i < targets; ++i) {
      const std::size_t q = (p + i * c.m.node_count() / (2 * targets)) % c.m.node_count();
      double img = std::nan("");
      if (torus) {
        const auto& L = std::get<TorusDescriptor>(c.m.descriptor()).lengths;
        img = heat_kernel_torus_images(L, c.m.nodes()[p], c.m.nodes()[q], time, required_image_radius(L, time));
      }
      t.add({time, double(q), c.m.distance(p, q), heat_kernel(h, p, q, time), h.reliable(time) ? 1.0 : 0.0, img});
    }
  }
  c.table("heat.csv", t);
  c.out.summary["t_gauss"] = h.t_gauss();
}

void kernel(Context& c) {
  const auto p = opt<std::size_t>(c.cfg.options, "node", 0);
  const auto max_rows = opt<std::size_t>(c.cfg.options, "rows", 64);
  if (p >= c.m.node_count()) throw ConfigError("options.node out of range");
  Table t{{"s", "q", "d", "K_s", "euclidean_model", "ratio"}, {}};
  std::vector<std::pair<double, std::size_t>> byd;
  const double dmax = 0.5 * c.m.injectivity_radius();
  for (std::size_t q = 0; q < c.m.node_count(); ++q) {
    const double d = c.m.distance(p, q);
    if (q != p && d <= dmax) byd.push_back({d, q});
  }
  std::sort(byd.begin(), byd.end());
  const std::size_t stride = std::max<std::size_t>(1, byd.size() / max_rows);
  for (double s : c.cfg.s) {
    const auto params = constants(c.m.dim(), s);
    SingularKernel k(c.m, params, c.quad(params));
    const auto row = k.row(p);
    for (std::size_t i = 0; i < byd.size(); i += stride) {
      const auto [d, q] = byd[i];
      const double model = params.alpha_ns / std::pow(d, c.m.dim() + s);
      t.add({s, double(q), d, row[q], model, row[q] / model});
    }
  }
  c.table("kernel.csv", t);
}

void fraclap_routes(Context& c) {
  const auto u = named_field(c.m, c.cfg.options.value("field", json()), "smooth");
  const auto routes = opt<std::vector<std::string>>(c.cfg.options, "routes", {"spectral", "bochner", "pv", "dtn"});
  auto has = [&](const char* r) { return std::find(routes.begin(), routes.end(), r) != routes.end(); };
  Table t{{"s", "node", "u", "spectral", "bochner", "pv", "dtn"}, {}};
  const double nan = std::nan("");
  for (double s : c.cfg.s) {
    const auto params = constants(c.m.dim(), s);
    const auto spec = fraclap_spectral(c.m, u, params).values();
    std::vector<double> boch(u.size(), nan), pv(u.size(), nan), dn(u.size(), nan);
    json sm;
    if (has("bochner")) {
      boch = fraclap_bochner(c.m, u, params).values();
      sm["bochner_sup_diff"] = sup_diff(boch, spec);
    }
    if (has("pv")) {
      const auto fam = pv_family_from_string(opt<std::string>(c.cfg.options, "family", "gaussian_factor"));
      pv = fraclap_pv(c.m, u, params, PvScheme::geometric(fam, default_pv_eps0(c.m)), c.quad(params)).value.values();
      sm["pv_sup_diff"] = sup_diff(pv, spec);
    }
    if (has("dtn")) {
      double lmin = 1e300;
      for (double l : c.m.eigenvalues())
        if (l > 1e-12) lmin = std::min(lmin, l);
      const double zmin = std::min(1e-4, 1e-2 / std::sqrt(c.m.eigenvalues().back()));
      dn = dtn(extend(c.m, u, params, graded_z_grid(8.0 / std::sqrt(lmin), zmin))).values();
      sm["dtn_sup_diff"] = sup_diff(dn, spec);
    }
    sm["spectral_sup"] = sup_abs(spec);
    c.out.summary["per_s"][key(s)] = sm;
    for (std::size_t p = 0; p < u.size(); ++p) t.add({s, double(p), u[p], spec[p], boch[p], pv[p], dn[p]});
  }
  c.table("fraclap.csv", t);
}

void seminorm(Context& c) {
  const auto u = named_field(c.m, c.cfg.options.value("field", json()), "smooth");
  Table t{{"s", "spectral", "extension", "double_integral", "rel_extension", "rel_double_integral"}, {}};
  double lmin = 1e300;
  for (double l : c.m.eigenvalues())
    if (l > 1e-12) lmin = std::min(lmin, l);
  for (double s : c.cfg.s) {
    const auto params = constants(c.m.dim(), s);
    const double sp = seminorm_spectral(c.m, u, params);
    const double ex = extension_energy(extend(c.m, u, params, graded_z_grid(8.0 / std::sqrt(lmin) * 1.01)));
    const double di = seminorm_double_integral(c.m, u, params, c.quad(params));
    t.add({s, sp, ex, di, ex / sp - 1.0, di / sp - 1.0});
  }
  c.table("seminorm.csv", t);
}

void perimeter(Context& c) {
  if (c.m.kind() != ManifoldKind::torus) throw ConfigError("perimeter experiment needs a torus");
  const auto widths = opt<std::vector<double>>(c.cfg.options, "widths", {0.5, 0.25});
  const auto& L = std::get<TorusDescriptor>(c.m.descriptor()).lengths;
  std::vector<Field> shapes;
  for (double w : widths) {
    if (!(w > 0 && w < 1)) throw ConfigError("options.widths must lie in (0, 1)");
    shapes.push_back(sample(c.m, [&](const Vec3& x) { return std::abs(x[0] - L[0] / 2) < w * L[0] / 2 ? 1.0 : 0.0; }));
  }
  const auto rep = perimeter_limit_report(c.m, shapes, c.cfg.s);
  Table t{{"shape", "s", "per_s", "per", "ratio"}, {}};
  for (const auto& r : rep.rows) t.add({double(r.shape), r.s, r.per_s, r.per, r.ratio});
  c.table("perimeter.csv", t);
  c.out.summary["spread"] = rep.spread;
  c.out.summary["trend"] = rep.trend;
}

void extension_exp(Context& c) {
  const auto lambdas = opt<std::vector<double>>(c.cfg.options, "lambdas", {1.0, 4.0, 16.0});
  const double zmax = opt<double>(c.cfg.options, "z_max", 8.0);
  const auto grid = graded_z_grid(zmax);
  Table prof{{"s", "lambda", "z", "u", "du"}, {}};
  Table en{{"s", "lambda", "beta_e", "lambda_pow", "rel", "pde_residual"}, {}};
  for (double s : c.cfg.s) {
    const auto params = constants(1, s);
    for (double l : lambdas) {
      if (!(l >= 0)) throw ConfigError("options.lambdas must be nonnegative");
      for (double z : grid) prof.add({s, l, z, mode_profile(l, s, z), mode_profile_derivative(l, s, z)});
      if (l > 0) {
        const double be = params.beta_s * mode_energy(l, s, std::max(zmax, 40.0 / std::sqrt(l)));
        const double target = std::pow(l, s / 2);
        en.add({s, l, be, target, be / target - 1.0, profile_pde_residual(l, s, grid)});
      }
    }
  }
  c.table("extension_profiles.csv", prof);
  c.table("extension_energy.csv", en);
}

void monotonicity(Context& c) {
  const bool torus = c.m.kind() == ManifoldKind::torus;
  const auto u = named_field(c.m, c.cfg.options.value("field", json()), torus ? "strip" : "cap");
  std::size_t center;
  if (c.cfg.options.contains("center")) {
    center = opt<std::size_t>(c.cfg.options, "center", 0);
  } else if (torus) {
    const auto& L = std::get<TorusDescriptor>(c.m.descriptor()).lengths;
    Vec3 x{L[0] / 4, 0, 0};
    for (std::size_t d = 1; d < L.size(); ++d) x[d] = L[d] / 2;
    center = nearest_node(c.m, x);
  } else {
    const double R = extent(c.m);
    center = nearest_node(c.m, {R, 0, 0});
  }
  const double cap = 0.25 * c.m.injectivity_radius();
  std::vector<double> radii = opt<std::vector<double>>(c.cfg.options, "radii", {});
  if (radii.empty())
    for (int i = 0; i < 8; ++i) radii.push_back(cap * (0.4 + 0.6 * i / 7.0));
  HalfBallQuadrature hb;
  try {
    hb = make_half_ball(c.m, center, radii);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (c.cfg.options.contains("prefactor")) hb.prefactor = opt<double>(c.cfg.options, "prefactor", 0.0);
  const std::string F = opt<std::string>(c.cfg.options, "potential", "zero");
  Table t{{"s", "R", "sob", "pot", "phi", "phi_drift", "dphi"}, {}};
  for (double s : c.cfg.s) {
    EnergySpec spec;
    spec.params = constants(c.m.dim(), s);
    spec.F = F == "double_well" ? Potential::double_well() : Potential::zero();
    if (F != "zero" && F != "double_well") throw ConfigError("options.potential must be zero or double_well");
    json v;
    double C = opt<double>(c.cfg.options, "C_drift", std::nan(""));
    if (std::isnan(C)) {
      if (c.m.curvature_bound() > 0) {
        const auto sw = drift_sweep(c.m, u, spec, hb);
        C = std::isnan(sw.smallest_passing) ? sw.C_values.back() : sw.smallest_passing;
        v["drift_sweep"] = {{"C", sw.C_values}, {"passed", sw.passed}};
      } else {
        C = c.m.dim();
      }
    }
    const auto rep = monotonicity_sweep(c.m, u, spec, hb, C);
    for (const auto& r : rep.records) t.add({s, r.R, r.sobolev, r.potential, r.phi, r.phi_drift, r.dphi});
    v["C_drift"] = C;
    v["K"] = rep.K;
    v["phi_mean"] = rep.phi_mean;
    v["min_step"] = rep.min_step;
    v["tol_mono"] = rep.tol_mono;
    v["monotone"] = rep.monotone;
    v["near_constancy"] = rep.near_constancy;
    v["gibbs_overshoot"] = rep.gibbs_overshoot;
    c.out.summary["verdict"][key(s)] = v;
    if (!rep.monotone) c.fail("Phi not monotone at s = " + format_number(s));
  }
  c.out.summary["center"] = center;
  c.table("monotonicity.csv", t);
}

void pv_equivalence(Context& c) {
  const auto u = named_field(c.m, c.cfg.options.value("field", json()), "smooth");
  const double eps0 = opt<double>(c.cfg.options, "eps0", default_pv_eps0(c.m));
  const int rungs = opt<int>(c.cfg.options, "rungs", 5);
  const double tol = opt<double>(c.cfg.options, "tolerance", 1e-3);
  const PvFamily fams[] = {PvFamily::gaussian_factor, PvFamily::ball_removal, PvFamily::t_truncation};
  Table t{{"s", "node", "spectral", "gaussian_factor", "ball_removal", "t_truncation"}, {}};
  for (double s : c.cfg.s) {
    const auto params = constants(c.m.dim(), s);
    const auto quad = c.quad(params);
    std::vector<std::vector<double>> lim;
    for (auto f : fams) lim.push_back(fraclap_pv(c.m, u, params, PvScheme::geometric(f, eps0, rungs), quad).value.values());
    const auto spec = fraclap_spectral(c.m, u, params).values();
    const double scale = sup_abs(spec);
    json v;
    for (int a = 0; a < 3; ++a) {
      v["sup"][to_string(fams[a])] = sup_abs(lim[a]);
      for (int b = a + 1; b < 3; ++b) {
        const double d = sup_diff(lim[a], lim[b]) / scale;
        v["pairwise"][std::string(to_string(fams[a])) + "-" + to_string(fams[b])] = d;
        if (!(d <= tol)) c.fail("families differ by " + format_number(d) + " at s = " + format_number(s));
      }
    }
    v["tolerance"] = tol;
    c.out.summary["per_s"][key(s)] = v;
    for (std::size_t p = 0; p < u.size(); ++p) t.add({s, double(p), spec[p], lim[0][p], lim[1][p], lim[2][p]});
  }
  c.table("pv_equivalence.csv", t);
}

void scaling(Context& c) {
  if (c.m.kind() != ManifoldKind::torus) throw ConfigError("scaling experiment needs a torus");
  const auto factors = opt<std::vector<double>>(c.cfg.options, "factors", {0.5, 2.0});
  const auto targets = opt<std::size_t>(c.cfg.options, "targets", 8);
  const auto desc = std::get<TorusDescriptor>(c.m.descriptor());
  Table t{{"s", "r", "q", "K", "K_scaled", "predicted", "rel"}, {}};
  for (double r : factors) {
    if (!(r > 0)) throw ConfigError("options.factors must be positive");
    auto L = desc.lengths;
    for (double& l : L) l *= r;
    const auto ms = build_torus(c.m.dim(), L, desc.grid, c.m.mode_count());
    for (double s : c.cfg.s) {
      const auto params = constants(c.m.dim(), s);
      SingularKernel k(c.m, params, c.quad(params));
      SingularKernel ks_(ms, params, default_quadrature(ms, params));
      for (std::size_t i = 1; i <= targets; ++i) {
        const std::size_t q = i * c.m.node_count() / (2 * targets + 1);
        const double a = k.evaluate(0, q).value, b = ks_.evaluate(0, q).value;
        const double pred = std::pow(r, -(c.m.dim() + s)) * a;
        t.add({s, r, double(q), a, b, pred, b / pred - 1.0});
      }
    }
  }
  c.table("scaling.csv", t);
}

void defect(Context& c) {
  const auto p = opt<std::size_t>(c.cfg.options, "node", 0);
  if (p >= c.m.node_count()) throw ConfigError("options.node out of range");
  std::vector<double> radii = opt<std::vector<double>>(c.cfg.options, "radii", {});
  if (radii.empty()) {
    const double hi = std::min(0.3, 0.25 * c.m.injectivity_radius());
    for (int i = 0; i < 8; ++i) radii.push_back(hi * std::pow(0.01 / hi, i / 7.0));
  }
  std::vector<Vec3> dirs{{1, 0, 0}, {0, 1, 0}};
  if (c.m.dim() == 1) dirs = {{1, 0, 0}};
  Table t{{"s", "direction", "radius", "kernel", "model", "normalized_defect", "error_bound"}, {}};
  for (double s : c.cfg.s) {
    const auto params = constants(c.m.dim(), s);
    std::vector<DefectRow> rows;
    try {
      rows = asymptotic_defect_report(c.m, p, dirs, radii, params, c.quad(params));
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    for (const auto& r : rows)
      t.add({s, double(r.direction), r.radius, r.kernel, r.model, r.normalized_defect, r.error_bound});
  }
  c.table("defect.csv", t);
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  RunResult out;
  try {
    Context c{cfg, build_manifold(cfg.manifold), out, {}};
    out.summary["files"] = json::object();
    const auto& e = cfg.experiment;
    if (e == "eigs") eigs(c);
    else if (e == "heat") heat(c);
    else if (e == "kernel") kernel(c);
    else if (e == "fraclap") fraclap_routes(c);
    else if (e == "seminorm") seminorm(c);
    else if (e == "perimeter") perimeter(c);
    else if (e == "extension") extension_exp(c);
    else if (e == "monotonicity") monotonicity(c);
    else if (e == "pv_equivalence") pv_equivalence(c);
    else if (e == "scaling") scaling(c);
    else if (e == "defect") defect(c);
    else throw ConfigError("unknown experiment '" + e + "'");

    Metadata md;
    md.experiment = e;
    md.version = FRACLAP_VERSION;
    md.config_digest = digest(cfg.canonical().dump());
    md.manifold_digest = c.m.digest();
    std::string q;
    for (const auto& d : c.quad_digests) q += d;
    md.quadrature_digest = q.empty() ? "" : digest(q);
    md.s = cfg.s;
    json report{{"metadata", to_json(md)}, {"config", cfg.canonical()}, {"summary", out.summary},
                {"status", out.status}, {"message", out.message}};
    out.files[e + ".json"] = report.dump(2) + "\n";
  } catch (const ConfigError& err) {
    out = {kConfigError, err.what(), {}, json::object()};
  } catch (const AccuracyError& err) {
    out = {kAccuracyError, err.what(), {}, {{"bound", err.bound()}, {"suggestion", err.suggestion()}}};
  } catch (const IncompatibilityError& err) {
    out = {kConfigError, err.what(), {}, json::object()};
  } catch (const Error& err) {
    // Domain, capacity, topology and geometry errors come from bad inputs.
    out = {kConfigError, err.what(), {}, json::object()};
  }
  return out;
}

RunResult run_and_write(const ExperimentConfig& cfg) {
  auto res = run(cfg);
  if (res.files.empty()) return res;
  for (const auto& [name, content] : res.files) write_atomic(cfg.out / name, content);
  if (!cfg.golden.empty()) {
    try {
      const auto diff = compare_golden(cfg.out, cfg.golden);
      json d = json::array();
      for (const auto& b : diff.breaches)
        d.push_back({{"file", b.file}, {"column", b.column}, {"row", b.row}, {"value", b.value},
                     {"golden", b.golden}, {"deviation", b.deviation}, {"tolerance", b.tolerance}});
      write_atomic(cfg.out / "golden_diff.json",
                   json{{"max_deviation", diff.max_deviation}, {"breaches", d}}.dump(2) + "\n");
      if (!diff.ok()) {
        res.status = kAcceptanceFailure;
        const auto& b = diff.breaches.front();
        res.message = std::to_string(diff.breaches.size()) + " golden breach(es); first: " + b.file + " column " +
                      b.column + " row " + std::to_string(b.row);
      }
    } catch (const IncompatibilityError& err) {
      res.status = kConfigError;
      res.message = err.what();
    }
  }
  return res;
}

void validate_report(const json& report, const fs::path& dir) {
  try {
    const auto& md = report.at("metadata");
    if (md.at("schema").get<std::string>() != kReportSchema) throw IncompatibilityError("report: schema mismatch");
    for (const char* k : {"experiment", "version", "config_digest", "manifold_digest", "quadrature_digest"})
      if (!md.at(k).is_string()) throw IncompatibilityError(std::string("report: bad metadata ") + k);
    if (!md.at("s").is_array()) throw IncompatibilityError("report: metadata s must be an array");
    if (digest(report.at("config").dump()) != md.at("config_digest").get<std::string>())
      throw IncompatibilityError("report: config digest mismatch");
    for (const auto& [name, cols] : report.at("summary").at("files").items()) {
      const auto t = parse_csv(read_file(dir / name));
      if (t.columns != cols.get<std::vector<std::string>>())
        throw IncompatibilityError("report: columns of " + name + " differ from the report");
    }
  } catch (const json::exception& e) {
    throw IncompatibilityError(std::string("report: ") + e.what());
  }
}

}  // namespace fraclap::cli
