#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/config.hpp"
#include "cli/run.hpp"
#include "slp/csv.hpp"

using namespace slp;
using namespace slp::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slp_test_" + name);
  fs::remove_all(p);
  return p;
}

json small_dynamics() {
  return json::parse(R"({
    "mode": "dynamics",
    "medium": {"xi_dimless": 10.0, "g2N_dimless": 1.0, "c_dimless": 1.0, "L_dimless": 3.0},
    "schedule": {"segments": [
      {"label": "write", "duration_dimless": 2.0, "omega_plus_dimless": 1.0},
      {"label": "store", "duration_dimless": 1.0},
      {"label": "release", "duration_dimless": 3.0, "omega_plus_dimless": 1.0}]},
    "input": {"t0_dimless": 1.0, "sigma_t_dimless": 0.25},
    "grid": {"Nz": 121},
    "outputs": {"stem": "small", "snapshot_count": 5}
  })");
}

int call(std::vector<std::string> args) {
  args.insert(args.begin(), "slpsim");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("every shipped preset parses") {
  const auto names = preset_names();
  CHECK(names == std::vector<std::string>{"fig1c", "fig1d", "fig2c", "fig3a", "fig3c"});
  for (const auto& n : names) {
    CAPTURE(n);
    const RunConfig cfg = parse_config_json(json{{"preset", n}});
    CHECK(cfg.outputs.stem == n);
    CHECK(!cfg.caption.empty());
  }
  CHECK_THROWS_WITH_AS(preset_json("fig9"), doctest::Contains("fig1c"), ValidationError);
}

TEST_CASE("unit suffixes convert to SI") {
  const RunConfig cfg = parse_config_json(json{{"preset", "fig3a"}});
  const auto& d = *cfg.dynamics;
  CHECK(d.medium.L == doctest::Approx(0.04));
  CHECK(d.medium.xi == doctest::Approx(1e4));
  CHECK(d.medium.gamma_s == doctest::Approx(5e4));
  CHECK(d.stages.front().omega_plus == doctest::Approx(kTwoPi * 5e6));
  CHECK(d.stages.front().duration == doctest::Approx(12e-6));
  CHECK(d.medium.c == 299792458.0);
  CHECK(group_velocity(d.stages.front().omega_plus, 0.0, d.medium.g2N, d.medium.c) == doctest::Approx(5000.0));

  const RunConfig s = parse_config_json(json{{"preset", "fig2c"}});
  CHECK(s.spectrum->atom.gamma_e == doctest::Approx(units::mhz(3.0)));
  CHECK(s.spectrum->detunings.front() == doctest::Approx(units::mhz(-60.0)));
}

TEST_CASE("intensity FWHM converts to amplitude sigma") {
  const RunConfig cfg = parse_config_json(json{{"preset", "fig1c"}});
  CHECK(cfg.dynamics->input.sigma_t == doctest::Approx(1.0 / (2.0 * std::sqrt(std::log(2.0)))));
}

TEST_CASE("config errors carry the offending path") {
  json doc = small_dynamics();
  doc["medium"]["colour"] = 3;
  CHECK_THROWS_WITH_AS(parse_config_json(doc), doctest::Contains("medium.colour"), ValidationError);

  doc = small_dynamics();
  doc["medium"].erase("xi_dimless");
  doc["medium"]["xi_per_m"] = 10.0;
  CHECK_THROWS_WITH_AS(parse_config_json(doc), doctest::Contains("mixes"), ValidationError);

  doc = small_dynamics();
  doc["medium"]["xi_per_cm"] = 1.0;
  CHECK_THROWS_AS(parse_config_json(doc), ValidationError);

  doc = small_dynamics();
  doc["grid"]["Nz"] = "many";
  CHECK_THROWS_WITH_AS(parse_config_json(doc), doctest::Contains("grid.Nz"), ValidationError);

  doc = small_dynamics();
  doc["mode"] = "teleport";
  CHECK_THROWS_AS(parse_config_json(doc), ValidationError);

  doc = small_dynamics();
  doc["medium"].erase("c_dimless");
  CHECK_THROWS_WITH_AS(parse_config_json(doc), doctest::Contains("medium.c"), ValidationError);
}

TEST_CASE("preset overrides replace a quantity given in a different unit") {
  const json merged = merge_config(preset_json("fig3a"), json{{"medium", {{"L_mm", 20.0}}}});
  CHECK(!merged["medium"].contains("L_cm"));
  const RunConfig cfg = parse_config_json(json{{"preset", "fig3a"}, {"medium", {{"L_mm", 20.0}}}});
  CHECK(cfg.dynamics->medium.L == doctest::Approx(0.02));
}

TEST_CASE("sweep paths address array elements by label or index") {
  json doc = preset_json("fig3c");
  set_config_path(doc, "schedule.segments.hold.duration_us", 2.5);
  CHECK(doc["schedule"]["segments"][1]["duration_us"] == 2.5);
  set_config_path(doc, "schedule.segments.0.duration_ms", 0.008);
  CHECK(!doc["schedule"]["segments"][0].contains("duration_us"));
  CHECK(doc["schedule"]["segments"][0]["duration_ms"] == 0.008);
  CHECK_THROWS_AS(set_config_path(doc, "schedule.segments.nope.duration_us", 1.0), ValidationError);
  CHECK_THROWS_AS(set_config_path(doc, "medium.radius_m", 1.0), ValidationError);
}

TEST_CASE("sweep expansion keeps declared order and names entries") {
  const RunConfig cfg = parse_config_json(json{{"preset", "fig3c"}});
  const auto entries = expand_sweep(cfg);
  REQUIRE(entries.size() == 7);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& st = entries[i].dynamics->stages;
    // The zero-length hold is dropped from the first entry.
    const double hold = i == 0 ? 0.0 : st[1].duration;
    CHECK(hold == doctest::Approx(1e-6 * static_cast<double>(i)));
    CHECK(entries[i].outputs.stem == "fig3c_00" + std::to_string(i));
  }
  CHECK(entries[0].dynamics->stages.size() == 2);
}

TEST_CASE("config hash is stable and sensitive") {
  const json a = preset_json("fig1c");
  json b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b["grid"]["Nz"] = 603;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("exponential fit recovers a clean decay") {
  std::vector<double> x, y;
  for (int k = 0; k < 6; ++k) {
    x.push_back(k);
    y.push_back(2.0 * std::exp(-0.3 * k));
  }
  const auto fit = fit_exponential(x, y);
  CHECK(fit.rate == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(fit.amplitude == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.monotone_decreasing);
}

TEST_CASE("dynamics run writes the declared CSV columns") {
  const fs::path dir = scratch("dyn");
  json doc = small_dynamics();
  doc["outputs"]["dir"] = dir.string();
  const RunManifest m = run(parse_config_json(doc));
  CHECK(fs::exists(dir / "small_manifest.json"));
  const auto traj = read_csv(dir / "small_trajectory.csv");
  CHECK(traj.header == std::vector<std::string>{"t", "tau", "stage", "flux_fwd", "flux_bwd", "spin_norm", "centroid",
                                                "width", "intensity_total"});
  CHECK(!traj.rows.empty());
  const auto snap = read_csv(dir / "small_snapshots.csv");
  CHECK(snap.header ==
        std::vector<std::string>{"t", "z", "re_S", "im_S", "abs_psi_plus", "abs_psi_minus"});
  CHECK(snap.rows.size() == 5 * 121);
  CHECK_THROWS_WITH_AS(traj.column("flux_sideways"), doctest::Contains("flux_sideways"), ValidationError);

  const json manifest = json::parse(slurp(dir / "small_manifest.json"));
  CHECK(manifest["config_hash"] == m.config_hash);
  CHECK(manifest["solver_version"] == kSolverVersion);
  CHECK(manifest["artifacts"].size() == 4);
}

TEST_CASE("spectrum and dispersion runs write their CSVs") {
  const fs::path dir = scratch("spectrum");
  json doc{{"preset", "fig2c"}, {"outputs", {{"dir", dir.string()}}}, {"spectrum", {{"detuning_count", 41}}}};
  run(parse_config_json(doc));
  const auto table = read_csv(dir / "fig2c_spectrum.csv");
  CHECK(table.header == std::vector<std::string>{"delta_Hz", "T", "R", "A", "T_bd_off"});
  CHECK(table.rows.size() == 41);
  CHECK(table.values("delta_Hz").front() == doctest::Approx(-60e6));

  json disp = json::parse(R"({
    "mode": "dispersion",
    "dispersion": {"alpha_plus_dimless": 0.5, "alpha_minus_dimless": 0.5, "xi_dimless": 10.0,
                   "k_min_dimless": -5.0, "k_max_dimless": 5.0, "k_count": 11}
  })");
  disp["outputs"]["dir"] = dir.string();
  disp["outputs"]["stem"] = "disp";
  run(parse_config_json(disp));
  const auto d = read_csv(dir / "disp_dispersion.csv");
  CHECK(d.header == std::vector<std::string>{"k", "re_omega", "im_omega"});
  CHECK(d.values("im_omega")[10] == doctest::Approx(2.5));
}

TEST_CASE("csv numbers use nine significant digits") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333");
  CHECK(format_number(-2.5e-12) == "-2.5e-12");
}

TEST_CASE("missing CSV file is an I/O error") {
  CHECK_THROWS_AS(read_csv("/nonexistent/none.csv"), IoError);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("exit");
  fs::create_directories(dir);
  CHECK(call({"--list-presets"}) == 0);
  CHECK(call({}) == 2);
  CHECK(call({"--preset", "nope"}) == 2);
  CHECK(call({"--config", (dir / "absent.json").string()}) == 4);

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(call({"--config", (dir / "broken.json").string()}) == 2);

  json unstable = small_dynamics();
  unstable["grid"]["dt_dimless"] = 0.5;
  unstable["outputs"]["dir"] = (dir / "unstable").string();
  std::ofstream(dir / "unstable.json") << unstable.dump();
  CHECK(call({"--config", (dir / "unstable.json").string()}) == 3);

  json ok = small_dynamics();
  std::ofstream(dir / "ok.json") << ok.dump();
  CHECK(call({"--config", (dir / "ok.json").string(), "--out", (dir / "ok").string()}) == 0);
  CHECK(fs::exists(dir / "ok" / "small_trajectory.csv"));

  // A regular file where the output directory should be.
  std::ofstream(dir / "blocker") << "x";
  CHECK(call({"--config", (dir / "ok.json").string(), "--out", (dir / "blocker" / "sub").string()}) == 4);
}

TEST_CASE("a failing sweep entry leaves no partial artifacts") {
  const fs::path dir = scratch("rollback");
  json doc = small_dynamics();
  doc["mode"] = "sweep";
  doc["sweep"] = {{"parameter", "grid.dt_dimless"}, {"values", {0.0, 0.5}}};
  doc["grid"]["dt_dimless"] = 0.0;
  doc["outputs"]["dir"] = dir.string();
  CHECK_THROWS_AS(run(parse_config_json(doc)), StepSizeError);
  const bool empty = !fs::exists(dir) || fs::is_empty(dir);
  CHECK(empty);
}

TEST_CASE("sweep writes a table and a summary") {
  const fs::path dir = scratch("sweep");
  json doc = small_dynamics();
  doc["mode"] = "sweep";
  doc["sweep"] = {{"parameter", "schedule.segments.store.duration_dimless"}, {"values", {0.5, 1.0, 1.5}}};
  doc["medium"]["gamma_s_dimless"] = 0.2;
  doc["outputs"]["dir"] = dir.string();
  doc["threads"] = 2;
  run(parse_config_json(doc));
  const auto t = read_csv(dir / "small_sweep.csv");
  REQUIRE(t.rows.size() == 3);
  const auto mag = t.values("released_magnitude");
  CHECK(mag[0] > mag[1]);
  CHECK(mag[1] > mag[2]);
  CHECK(fs::exists(dir / "small_001_trajectory.csv"));
  const json summary = json::parse(slurp(dir / "small_sweep_summary.json"));
  CHECK(summary.contains("magnitude_fit"));
}
