#include "cli/run.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "slp/csv.hpp"
#include "slp/dispersion.hpp"
#include "slp/errors.hpp"

namespace slp::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Files written by one run, so they can be listed or rolled back together.
class ArtifactSet {
 public:
  explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      names_.push_back(name);
    }
    write_file(dir_ / name, body);
  }

  void write_json(const std::string& name, const json& doc) {
    write(name, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
  }

  void rollback() {
    std::error_code ec;
    for (const auto& n : names_) fs::remove(dir_ / n, ec);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out = names_;
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
  std::mutex mu_;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::size_t nearest_index(const std::vector<double>& x, double target) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i] - target) < std::abs(x[best] - target)) best = i;
  return best;
}

struct EntryResult {
  std::vector<std::string> warnings;
  SweepRow row;
  bool has_row = false;
};

EntryResult run_dynamics(const RunConfig& cfg, ArtifactSet& files) {
  const auto& d = *cfg.dynamics;
  const Trajectory traj = run_protocol(d.medium, d.schedule(), d.input, d.grid, d.run);
  const ObservableSet obs = observables(traj);
  const std::string& stem = cfg.outputs.stem;
  files.write(stem + "_trajectory.csv", [&](std::ostream& out) { write_trajectory_csv(out, traj); });
  if (!traj.snapshots.empty()) {
    files.write(stem + "_snapshots.csv", [&](std::ostream& out) {
      write_snapshot_csv(out, traj, cfg.outputs.snapshot_z_stride, cfg.outputs.snapshot_t_stride);
    });
  }
  files.write_json(stem + "_summary.json", dynamics_summary(traj, obs));

  EntryResult res;
  res.warnings = traj.warnings;
  res.has_row = true;
  const auto& last = obs.stages.back();
  res.row.released_forward = last.forward;
  res.row.released_backward = last.backward;
  res.row.released_magnitude = std::sqrt(last.forward + last.backward);
  res.row.stored_fraction = obs.stored_fraction;
  return res;
}

EntryResult run_dispersion(const RunConfig& cfg, ArtifactSet& files) {
  const auto& d = *cfg.dispersion;
  const auto points = dispersion_curve(d.ks, d.alpha_plus, d.alpha_minus, d.xi, d.c);
  const std::string& stem = cfg.outputs.stem;
  files.write(stem + "_dispersion.csv", [&](std::ostream& out) { write_dispersion_csv(out, points); });

  const SmallK sk = small_k_expansion(d.alpha_plus, d.alpha_minus, d.xi, d.c);
  json summary;
  summary["alpha_plus"] = d.alpha_plus;
  summary["alpha_minus"] = d.alpha_minus;
  summary["small_k"] = {{"speed", sk.speed}, {"diffusion", sk.diffusion}, {"direction", sk.direction}};

  if (!d.plane_wave_cycles.empty()) {
    const MediumParams medium{d.xi, 1.0, d.c, d.L, 0.0};
    std::vector<std::pair<int, PlaneWaveResult>> checks;
    for (int m : d.plane_wave_cycles)
      checks.emplace_back(m, plane_wave_check(kTwoPi * m / d.L, d.alpha_plus, d.alpha_minus, medium, Grid{d.nz, 0.0}));
    files.write(stem + "_plane_wave.csv", [&](std::ostream& out) {
      out << "cycles,k,re_omega_measured,im_omega_measured,re_omega_predicted,im_omega_predicted\n";
      for (const auto& [m, r] : checks) {
        out << m << ',' << format_number(kTwoPi * m / d.L) << ',' << format_number(r.measured_omega.real()) << ','
            << format_number(r.measured_omega.imag()) << ',' << format_number(r.predicted_omega.real()) << ','
            << format_number(r.predicted_omega.imag()) << '\n';
      }
    });
  }
  files.write_json(stem + "_summary.json", summary);
  return {};
}

EntryResult run_spectrum(const RunConfig& cfg, ArtifactSet& files) {
  const auto& s = *cfg.spectrum;
  SpectrumOptions opts = s.options;
  opts.threads = cfg.threads;
  const Spectrum on = transfer_spectrum(s.detunings, s.control, s.atom, opts);
  StandingWaveControl off_control = s.control;
  off_control.omega_minus = 0.0;
  const Spectrum off = transfer_spectrum(s.detunings, off_control, s.atom, opts);
  SpectrumOptions cmp = opts;
  cmp.harmonic_order = s.compare_order;
  const Spectrum other = transfer_spectrum(s.detunings, s.control, s.atom, cmp);

  const std::string& stem = cfg.outputs.stem;
  files.write(stem + "_spectrum.csv", [&](std::ostream& out) { write_spectrum_csv(out, on, off.T); });

  const std::size_t centre = nearest_index(s.detunings, 0.0);
  const auto r_top = static_cast<std::size_t>(std::distance(on.R.begin(), std::max_element(on.R.begin(), on.R.end())));
  double passivity = 0.0;
  for (std::size_t k = 0; k < on.T.size(); ++k) passivity = std::max(passivity, on.T[k] + on.R[k]);
  json summary;
  summary["T_bd_off_at_zero"] = off.T[centre];
  summary["T_at_zero"] = on.T[centre];
  summary["R_at_zero"] = on.R[centre];
  summary["R_max"] = on.R[r_top];
  summary["R_max_detuning_Hz"] = s.detunings[r_top] / kTwoPi;
  summary["T_at_R_max"] = on.T[r_top];
  if (s.detunings.size() >= 2) {
    summary["R_width_Hz"] = peak_width(s.detunings, on.R) / kTwoPi;
    summary["T_bd_off_width_Hz"] = peak_width(s.detunings, off.T) / kTwoPi;
  }
  summary["max_T_plus_R"] = passivity;
  summary["harmonic_truncation"] = {{"order", s.options.harmonic_order},
                                    {"compare_order", s.compare_order},
                                    {"max_abs_difference", max_spectrum_difference(on, other)}};
  files.write_json(stem + "_summary.json", summary);
  return {};
}

EntryResult run_entry(const RunConfig& cfg, ArtifactSet& files) {
  if (cfg.dynamics) return run_dynamics(cfg, files);
  if (cfg.dispersion) return run_dispersion(cfg, files);
  if (cfg.spectrum) return run_spectrum(cfg, files);
  throw ValidationError("config has nothing to run");
}

std::optional<double> numeric(const json& v) {
  if (v.is_number()) return v.get<double>();
  return std::nullopt;
}

void run_sweep(const RunConfig& cfg, ArtifactSet& files, std::vector<std::string>& warnings) {
  const std::vector<RunConfig> entries = expand_sweep(cfg);
  std::vector<EntryResult> results(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        results[i] = run_entry(entries[i], files);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(cfg.threads, 1, static_cast<int>(entries.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const auto& sw = *cfg.sweep;
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (const auto& w : results[i].warnings) warnings.push_back(entries[i].outputs.stem + ": " + w);
  if (sw.mode != Mode::Dynamics) return;

  std::vector<double> xs, ys;
  files.write(cfg.outputs.stem + "_sweep.csv", [&](std::ostream& out) {
    out << "index,value,released_fwd,released_bwd,released_magnitude,stored_fraction\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& r = results[i].row;
      const double v = numeric(sw.values[i]).value_or(std::numeric_limits<double>::quiet_NaN());
      out << i << ',' << format_number(v) << ',' << format_number(r.released_forward) << ','
          << format_number(r.released_backward) << ',' << format_number(r.released_magnitude) << ','
          << format_number(r.stored_fraction) << '\n';
      xs.push_back(v);
      ys.push_back(r.released_magnitude);
    }
  });
  json summary;
  summary["parameter"] = sw.parameter;
  summary["values"] = sw.values;
  summary["entries"] = entries.size();
  const bool all_numeric = std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
  if (all_numeric && xs.size() >= 3) {
    const ExponentialFit fit = fit_exponential(xs, ys);
    summary["magnitude_fit"] = {{"rate_per_parameter_unit", fit.rate},
                                {"amplitude", fit.amplitude},
                                {"r_squared", fit.r_squared},
                                {"monotone_decreasing", fit.monotone_decreasing}};
  }
  files.write_json(cfg.outputs.stem + "_sweep_summary.json", summary);
}

}  // namespace

json RunManifest::to_json() const {
  return {{"config_hash", config_hash},
          {"artifacts", artifacts},
          {"solver_version", solver_version},
          {"wall_seconds", wall_seconds},
          {"warnings", warnings}};
}

json dynamics_summary(const Trajectory& traj, const ObservableSet& obs) {
  json stages = json::array();
  for (std::size_t s = 0; s < obs.stages.size(); ++s) {
    const auto& e = obs.stages[s];
    stages.push_back({{"label", e.label},
                      {"kind", to_string(traj.stage_kinds[s])},
                      {"t_start", e.t_start},
                      {"t_end", e.t_end},
                      {"released_fwd", e.forward},
                      {"released_bwd", e.backward},
                      {"stored_energy_start", number_or_null(e.spin_norm_start / traj.c)},
                      {"stored_energy_end", number_or_null(e.spin_norm_end / traj.c)}});
  }
  return {{"input_energy", obs.input_energy},
          {"stored_fraction", number_or_null(obs.stored_fraction)},
          {"samples", traj.size()},
          {"snapshots", traj.snapshots.size()},
          {"stages", stages},
          {"warnings", traj.warnings}};
}

ExponentialFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("exponential fit needs at least two points");
  ExponentialFit fit;
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0)) throw NumericalError("exponential fit needs positive magnitudes");
    ly.push_back(std::log(y[i]));
    sx += x[i];
    sy += ly[i];
    sxx += x[i] * x[i];
    sxy += x[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icept = (sy - slope * sx) / n;
  const double mean = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += std::pow(ly[i] - (icept + slope * x[i]), 2);
    ss_tot += std::pow(ly[i] - mean, 2);
  }
  fit.rate = -slope;
  fit.amplitude = std::exp(icept);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  fit.monotone_decreasing = true;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (!(y[order[i]] < y[order[i - 1]])) fit.monotone_decreasing = false;
  return fit;
}

SweepRow sweep_row(const RunConfig& entry, const json& value) {
  if (!entry.dynamics) throw ValidationError("sweep rows need a dynamics entry");
  const auto& d = *entry.dynamics;
  RunOptions quiet = d.run;
  quiet.snapshot_count = 0;
  const Trajectory traj = run_protocol(d.medium, d.schedule(), d.input, d.grid, quiet);
  const ObservableSet obs = observables(traj);
  SweepRow row;
  row.value = value;
  row.released_forward = obs.stages.back().forward;
  row.released_backward = obs.stages.back().backward;
  row.released_magnitude = std::sqrt(row.released_forward + row.released_backward);
  row.stored_fraction = obs.stored_fraction;
  return row;
}

RunManifest run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(config.outputs.dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.outputs.dir.string() + ": " + ec.message());

  ArtifactSet files(config.outputs.dir);
  RunManifest manifest;
  manifest.config_hash = config_hash(config.effective);
  try {
    if (config.sweep) {
      run_sweep(config, files, manifest.warnings);
    } else {
      manifest.warnings = run_entry(config, files).warnings;
    }
    const std::string manifest_name = config.outputs.stem + "_manifest.json";
    manifest.artifacts = files.names();
    manifest.artifacts.push_back(manifest_name);
    manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json doc = manifest.to_json();
    doc["mode"] = to_string(config.mode);
    doc["caption"] = config.caption;
    doc["config"] = config.effective;
    write_file(config.outputs.dir / manifest_name, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
  } catch (...) {
    files.rollback();
    throw;
  }
  return manifest;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Stationary light pulse simulator"};
  std::string config_path, preset, out_dir;
  int threads = 0;
  long long seed = 0;
  bool list = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--preset", preset, "shipped preset to run or to use as the config base");
  app.add_option("--out", out_dir, "output directory (overrides outputs.dir)");
  app.add_option("--threads", threads, "worker threads for sweeps and spectra")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "reserved; all solvers are deterministic");
  app.add_flag("--list-presets", list, "print the shipped preset names");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list) {
      for (const auto& n : preset_names()) std::cout << n << '\n';
      return 0;
    }
    if (config_path.empty() && preset.empty()) throw ValidationError("one of --config or --preset is required");
    json doc = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoError("cannot open config " + config_path);
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ValidationError(config_path + ": malformed JSON: " + e.what());
      }
      if (!doc.is_object()) throw ValidationError(config_path + ": top level must be an object");
    }
    if (!preset.empty()) {
      if (doc.contains("preset") && doc["preset"] != preset)
        throw ValidationError("--preset conflicts with the config's preset key");
      doc["preset"] = preset;
    }
    if (!out_dir.empty()) doc["outputs"]["dir"] = out_dir;
    if (threads > 0) doc["threads"] = threads;

    const RunConfig cfg = parse_config_json(doc);
    const RunManifest m = run(cfg);
    std::cout << "config " << m.config_hash << " -> " << cfg.outputs.dir.string() << '\n';
    for (const auto& a : m.artifacts) std::cout << "  " << a << '\n';
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace slp::cli
