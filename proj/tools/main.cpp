#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "experiments.hpp"
#include "fraclap/errors.hpp"
#include "fraclap/kernel.hpp"
#include "fraclap/report.hpp"

using namespace fraclap;
using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"fraclap: fractional Laplacians, seminorms and perimeters on closed manifolds"};
  app.require_subcommand(1);

  std::string config_path, out_dir, golden_dir, preset;
  std::vector<double> s_values;
  std::string experiment;
  for (const auto& name : cli::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_dir, "output directory (default: config 'out' or ./out)");
    sub->add_option("--golden", golden_dir, "directory with golden CSVs and tolerances.json");
    sub->add_option("--manifold", preset, "preset manifold: torus1d, torus2d, sphere, icosphere");
    sub->add_option("--s", s_values, "fractional order(s)")->delimiter(',');
    sub->callback([&, name] { experiment = name; });
  }
  int cn = 1;
  double cs = 1.0;
  auto* cst = app.add_subcommand("constants", "print alpha_{n,s}, beta_s and c_s");
  cst->add_option("--n", cn, "dimension");
  cst->add_option("--s", cs, "fractional order")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfigError;
  }

  if (cst->parsed()) {
    try {
      const auto p = constants(cn, cs);
      std::printf("n=%d s=%s alpha=%s beta=%s c=%s\n", cn, format_number(cs).c_str(),
                  format_number(p.alpha_ns).c_str(), format_number(p.beta_s).c_str(),
                  format_number(p.c_s).c_str());
      return 0;
    } catch (const Error& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return cli::kConfigError;
    }
  }

  cli::ExperimentConfig cfg;
  try {
    json j = json::object();
    if (!config_path.empty()) {
      try {
        j = json::parse(read_file(config_path));
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
      } catch (const IncompatibilityError& e) {
        throw ConfigError(e.what());
      }
    }
    if (j.contains("experiment") && j["experiment"] != experiment)
      throw ConfigError("config experiment '" + j["experiment"].dump() + "' does not match '" + experiment + "'");
    j["experiment"] = experiment;
    if (!preset.empty()) j["manifold"] = cli::preset_manifold(preset);
    if (!s_values.empty()) j["frac"]["s"] = s_values;
    if (!out_dir.empty()) j["out"] = out_dir;
    if (!golden_dir.empty()) j["golden"] = golden_dir;
    cfg = cli::parse_config(j);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kConfigError;
  }

  const auto res = cli::run_and_write(cfg);
  switch (res.status) {
    case cli::kOk:
      std::cout << experiment << ": ok, " << res.files.size() << " file(s) in " << cfg.out.string() << "\n";
      break;
    case cli::kAcceptanceFailure:
      std::cerr << experiment << ": acceptance failure: " << res.message << "\n";
      break;
    case cli::kAccuracyError:
      std::cerr << experiment << ": accuracy error: " << res.message << "\n";
      break;
    default:
      std::cerr << experiment << ": config error: " << res.message << "\n";
  }
  return res.status;
}
