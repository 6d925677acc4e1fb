#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "experiments.hpp"
#include "fraclap/errors.hpp"
#include "fraclap/report.hpp"

using namespace fraclap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fraclap_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

json kernel_config(const fs::path& out) {
  return {{"experiment", "kernel"},
          {"manifold", cli::preset_manifold("torus1d")},
          {"frac", {{"s", {0.6}}}},
          {"out", out.string()}};
}

}  // namespace

TEST_CASE("config validation") {
  json j = kernel_config("x");
  j["frac"]["s"] = {2.5};
  CHECK_THROWS_AS(cli::parse_config(j), ConfigError);
  j["frac"]["s"] = {0.0};
  CHECK_THROWS_AS(cli::parse_config(j), ConfigError);

  j = kernel_config("x");
  j["experiment"] = "perimeter";
  j["frac"]["s"] = {1.2};
  CHECK_THROWS_AS(cli::parse_config(j), ConfigError);
  j["frac"]["s"] = {0.9};
  CHECK_NOTHROW(cli::parse_config(j));

  j = kernel_config("x");
  j["bogus"] = 1;
  CHECK_THROWS_AS(cli::parse_config(j), ConfigError);
  j = kernel_config("x");
  j["experiment"] = "plot";
  CHECK_THROWS_AS(cli::parse_config(j), ConfigError);
  j = kernel_config("x");
  j["manifold"] = {{"kind", "klein"}};
  CHECK_THROWS_AS(cli::parse_config(j), ConfigError);
  CHECK_THROWS_AS(cli::preset_manifold("cube"), ConfigError);
}

TEST_CASE("invalid run writes nothing") {
  const auto out = scratch("invalid");
  auto cfg = cli::parse_config(kernel_config(out));
  cfg.options = {{"node", 1u << 30}};
  const auto res = cli::run_and_write(cfg);
  CHECK(res.status == cli::kConfigError);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("kernel report: schema, determinism, golden") {
  const auto a = scratch("a"), b = scratch("b");
  const auto ra = cli::run_and_write(cli::parse_config(kernel_config(a)));
  REQUIRE(ra.status == cli::kOk);
  const auto rb = cli::run_and_write(cli::parse_config(kernel_config(b)));
  REQUIRE(rb.status == cli::kOk);

  const auto report = json::parse(read_file(a / "kernel.json"));
  CHECK_NOTHROW(cli::validate_report(report, a));
  CHECK(report["metadata"]["manifold_digest"].get<std::string>().size() == 16);
  for (const char* f : {"kernel.csv", "kernel.json"}) CHECK(read_file(a / f) == read_file(b / f));

  const auto t = parse_csv(read_file(a / "kernel.csv"));
  CHECK(t.columns == std::vector<std::string>{"s", "q", "d", "K_s", "euclidean_model", "ratio"});
  for (const auto& r : t.rows)
    if (r[2] < 0.15) CHECK(std::abs(r[5] - 1.0) < 0.02);

  // Golden directory: a copy of b plus a tolerance manifest.
  json tol = {{"schema", kReportSchema}, {"files", {{"kernel.csv", json::object()}}}};
  for (const auto& c : t.columns) tol["files"]["kernel.csv"][c] = 1e-12;
  write_atomic(b / "tolerances.json", tol.dump());

  SECTION("identical files give an empty diff") {
    const auto diff = compare_golden(a, b);
    CHECK(diff.ok());
    CHECK(diff.max_deviation.at("kernel.csv").at("K_s") == 0.0);
  }
  SECTION("a perturbed value is named by column and row") {
    auto g = t;
    g.rows[3][3] *= 1.0 + 1e-6;
    write_atomic(b / "kernel.csv", to_csv(g));
    const auto diff = compare_golden(a, b);
    REQUIRE(diff.breaches.size() == 1);
    CHECK(diff.breaches[0].column == "K_s");
    CHECK(diff.breaches[0].row == 3);
    CHECK(diff.breaches[0].deviation == Catch::Approx(1e-6).epsilon(1e-3));

    auto cfg = cli::parse_config(kernel_config(a));
    cfg.golden = b;
    const auto res = cli::run_and_write(cfg);
    CHECK(res.status == cli::kAcceptanceFailure);
    CHECK(res.message.find("K_s") != std::string::npos);
    CHECK(fs::exists(a / "golden_diff.json"));
  }
  SECTION("a manifest without a column is incompatible") {
    tol["files"]["kernel.csv"].erase("ratio");
    write_atomic(b / "tolerances.json", tol.dump());
    CHECK_THROWS_AS(compare_golden(a, b), IncompatibilityError);
  }
  SECTION("schema mismatch") {
    tol["schema"] = "other/9";
    write_atomic(b / "tolerances.json", tol.dump());
    CHECK_THROWS_AS(compare_golden(a, b), IncompatibilityError);
  }
}

TEST_CASE("csv round trip is exact") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Table t{{"a", "b", "c"}, {}};
  for (int i = 0; i < 200; ++i) t.add({u(rng) * std::pow(10.0, i % 40 - 20), u(rng), double(i)});
  t.add({std::numeric_limits<double>::infinity(), 0.0, -0.0});
  const auto back = parse_csv(to_csv(t));
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(back.rows[i][j] == t.rows[i][j]);
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), IncompatibilityError);
  CHECK_THROWS_AS(parse_csv("a\n1x\n"), IncompatibilityError);
  CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("field import and export") {
  const auto m = build_torus(2, {1, 1}, {8, 8}, 49);
  const auto u = sample(m, [](const Vec3& x) { return std::sin(6.28 * x[0]) + x[1]; });
  const auto back = field_from_table(m, parse_csv(to_csv(field_table(u))));
  CHECK(back.values() == u.values());
  const auto small = build_torus(1, {1}, {8}, 7);
  CHECK_THROWS_AS(field_from_table(small, field_table(u)), IncompatibilityError);
}

TEST_CASE("pv equivalence experiment") {
  const auto out = scratch("pv");
  json j = {{"experiment", "pv_equivalence"},
            {"manifold", cli::preset_manifold("torus1d")},
            {"frac", {{"s", {0.4, 1.0}}}},
            {"out", out.string()}};
  const auto res = cli::run_and_write(cli::parse_config(j));
  CHECK(res.status == cli::kOk);
  const auto report = json::parse(read_file(out / "pv_equivalence.json"));
  CHECK_NOTHROW(cli::validate_report(report, out));
  for (const auto& [s, v] : report["summary"]["per_s"].items())
    for (const auto& [pair, d] : v["pairwise"].items()) CHECK(d.get<double>() <= 1e-3);
}

TEST_CASE("every experiment runs on a small configuration") {
  const json torus2 = {{"kind", "torus"}, {"lengths", {6.283185307179586, 6.283185307179586}}, {"grid", {16, 16}}};
  const json sphere = {{"kind", "sphere"}, {"radius", 1.0}, {"l_max", 10}, {"nodes_per_band", 22}};
  struct Case {
    std::string e;
    json m;
    std::vector<double> s;
    json opts;
  };
  const std::vector<Case> cases{
      {"eigs", sphere, {0.5}, json::object()},
      {"heat", torus2, {0.5}, json::object()},
      {"kernel", sphere, {0.5}, json::object()},
      {"fraclap", torus2, {0.5}, {{"routes", {"spectral", "bochner", "dtn"}}}},
      {"seminorm", sphere, {1.0}, json::object()},
      {"perimeter", torus2, {0.5, 0.7}, json::object()},
      {"extension", torus2, {0.5, 1.5}, json::object()},
      {"monotonicity", torus2, {0.5}, json::object()},
      {"scaling", torus2, {0.5}, json::object()},
      {"defect", sphere, {0.5}, json::object()},
  };
  for (const auto& c : cases) {
    INFO(c.e);
    const auto out = scratch(c.e);
    const json j = {{"experiment", c.e}, {"manifold", c.m}, {"frac", {{"s", c.s}}}, {"options", c.opts},
                    {"out", out.string()}};
    const auto res = cli::run_and_write(cli::parse_config(j));
    CHECK(res.status == cli::kOk);
    CHECK(res.message == "");
    CHECK_NOTHROW(cli::validate_report(json::parse(read_file(out / (c.e + ".json"))), out));
  }
}
