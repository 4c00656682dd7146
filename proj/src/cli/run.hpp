#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cli/config.hpp"
#include "slp/cw_spectra.hpp"
#include "slp/dynamics.hpp"

namespace slp::cli {

inline constexpr const char* kSolverVersion = "slpsim 1.0.0";

struct RunManifest {
  std::string config_hash;
  std::vector<std::string> artifacts;  ///< file names relative to the output directory
  std::string solver_version = kSolverVersion;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Summary of one dynamics run, as written to <stem>_summary.json.
nlohmann::json dynamics_summary(const Trajectory& traj, const ObservableSet& obs);

struct SweepRow {
  nlohmann::json value;
  double released_forward = 0.0;
  double released_backward = 0.0;
  double released_magnitude = 0.0;  ///< sqrt of the energy emitted in the final stage
  double stored_fraction = 0.0;
};

/// Least-squares line through (x, ln y): y ~ A exp(-rate x).
struct ExponentialFit {
  double rate = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  bool monotone_decreasing = false;
};
ExponentialFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y);

/// Runs one dynamics entry and returns its row without writing anything.
SweepRow sweep_row(const RunConfig& entry, const nlohmann::json& value);

/// Executes a validated config, writing every artifact into config.outputs.dir.
/// On failure, files written so far are removed and the error is rethrown.
RunManifest run(const RunConfig& config);

/// Command-line entry point; returns the process exit code
/// (0 ok, 2 validation, 3 numerical, 4 I/O).
int main_entry(int argc, char** argv);

}  // namespace slp::cli
