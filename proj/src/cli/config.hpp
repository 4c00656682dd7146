#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slp/core_model.hpp"
#include "slp/cw_spectra.hpp"
#include "slp/dynamics.hpp"

namespace slp::cli {

enum class Mode { Dynamics, Dispersion, Spectrum, Sweep };

const char* to_string(Mode mode);

struct OutputConfig {
  std::filesystem::path dir = "out";
  std::string stem = "run";
  int snapshot_z_stride = 1;
  int snapshot_t_stride = 1;
};

struct DynamicsConfig {
  MediumParams medium;
  std::vector<ControlSchedule::Stage> stages;
  double ramp_time = 0.0;
  SignalInput input;
  Grid grid;
  RunOptions run;
  bool dimensionless = false;

  ControlSchedule schedule() const { return ControlSchedule::from_stages(stages, ramp_time); }
};

struct DispersionConfig {
  double alpha_plus = 0.5;
  double alpha_minus = 0.5;
  double xi = 0.0;
  double c = 1.0;
  std::vector<double> ks;
  // Optional solver cross-check on a periodic grid of length L.
  std::vector<int> plane_wave_cycles;
  double L = 1.0;
  int nz = 256;
};

struct SpectrumConfig {
  AtomParams atom;
  StandingWaveControl control;
  std::vector<double> detunings;
  SpectrumOptions options;
  int compare_order = 3;  ///< second truncation order reported alongside
};

struct SweepConfig {
  std::string parameter;
  std::vector<nlohmann::json> values;
  Mode mode = Mode::Dynamics;
};

struct RunConfig {
  Mode mode = Mode::Dynamics;
  std::string caption;
  nlohmann::json effective;  ///< merged configuration the run was built from
  OutputConfig outputs;
  int threads = 1;
  std::optional<DynamicsConfig> dynamics;
  std::optional<DispersionConfig> dispersion;
  std::optional<SpectrumConfig> spectrum;
  std::optional<SweepConfig> sweep;
};

/// Raw preset JSON by name; throws ValidationError listing the known names.
nlohmann::json preset_json(const std::string& name);
std::vector<std::string> preset_names();

/// Recursively overlays `patch` on `base`. A quantity key replaces any
/// sibling with the same base name and a different unit suffix; arrays are
/// replaced whole.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& patch);

/// Validates and converts a configuration document. A "preset" key names a
/// shipped base config that the rest of the document overrides. Errors are
/// ValidationError messages that carry the offending config path.
RunConfig parse_config_json(const nlohmann::json& doc);
RunConfig parse_config(const std::filesystem::path& path);

/// Effective config of every sweep entry, in declared order.
std::vector<RunConfig> expand_sweep(const RunConfig& config);

/// Writes `value` at a dotted path such as "schedule.segments.hold.duration_us";
/// array elements are addressed by label or index.
void set_config_path(nlohmann::json& doc, const std::string& path, const nlohmann::json& value);

/// FNV-1a 64-bit hash of the canonical serialization, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace slp::cli
