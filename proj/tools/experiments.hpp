#pragma once

// Batch experiment runner behind the fraclap command line.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraclap/manifold.hpp"

namespace fraclap::cli {

enum ExitCode { kOk = 0, kAcceptanceFailure = 1, kConfigError = 2, kAccuracyError = 3 };

const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json manifold;
  std::vector<double> s;
  int points_per_unit = 16;
  nlohmann::json options = nlohmann::json::object();
  std::filesystem::path out = "out";
  std::filesystem::path golden;  // empty: no comparison

  /// Canonical JSON of everything that affects results (out/golden excluded).
  nlohmann::json canonical() const;
};

/// Manifold blocks for --manifold: torus1d, torus2d, sphere, icosphere.
nlohmann::json preset_manifold(const std::string& name);

/// Throws ConfigError on unknown keys, unknown experiment or manifold kind,
/// s outside (0, 2), or s outside (0, 1) for perimeter experiments.
ExperimentConfig parse_config(const nlohmann::json& j);

SpectralManifold build_manifold(const nlohmann::json& block);

struct RunResult {
  int status = kOk;
  std::string message;
  /// File name -> content, written atomically under cfg.out on success.
  std::map<std::string, std::string> files;
  nlohmann::json summary = nlohmann::json::object();
};

/// Computes every output in memory; nothing is written unless all succeed.
/// Library errors are mapped to exit codes.
RunResult run(const ExperimentConfig& cfg);

/// run() followed by writing and the optional golden comparison.
RunResult run_and_write(const ExperimentConfig& cfg);

/// Checks a report JSON's metadata block and that each listed CSV parses with
/// the recorded columns. Throws IncompatibilityError.
void validate_report(const nlohmann::json& report, const std::filesystem::path& dir);

}  // namespace fraclap::cli
