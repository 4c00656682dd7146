#include "cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "slp/errors.hpp"

namespace slp::cli {

using nlohmann::json;

namespace {

enum class Kind { Length, InvLength, Time, Rate, Coupling, Speed, Angle, Pure };

enum class System { None, SI, Dimless };

struct UnitDef {
  const char* suffix;
  double factor;
  System system;
};

const std::vector<UnitDef>& units_of(Kind kind) {
  static const std::map<Kind, std::vector<UnitDef>> table = {
      {Kind::Length,
       {{"m", 1.0, System::SI}, {"cm", 1e-2, System::SI}, {"mm", 1e-3, System::SI}, {"um", 1e-6, System::SI},
        {"nm", 1e-9, System::SI}, {"dimless", 1.0, System::Dimless}}},
      {Kind::InvLength,
       {{"per_m", 1.0, System::SI}, {"per_cm", 1e2, System::SI}, {"per_mm", 1e3, System::SI},
        {"dimless", 1.0, System::Dimless}}},
      {Kind::Time,
       {{"s", 1.0, System::SI}, {"ms", 1e-3, System::SI}, {"us", 1e-6, System::SI}, {"ns", 1e-9, System::SI},
        {"dimless", 1.0, System::Dimless}}},
      {Kind::Rate,
       {{"MHz", kTwoPi * 1e6, System::SI}, {"kHz", kTwoPi * 1e3, System::SI}, {"Hz", kTwoPi, System::SI},
        {"rad_per_s", 1.0, System::SI}, {"per_s", 1.0, System::SI}, {"per_ms", 1e3, System::SI},
        {"per_us", 1e6, System::SI}, {"dimless", 1.0, System::Dimless}}},
      {Kind::Coupling, {{"rad2_per_s2", 1.0, System::SI}, {"dimless", 1.0, System::Dimless}}},
      {Kind::Speed, {{"m_per_s", 1.0, System::SI}, {"dimless", 1.0, System::Dimless}}},
      {Kind::Angle, {{"rad", 1.0, System::None}, {"deg", kPi / 180.0, System::None}}},
      {Kind::Pure, {{"dimless", 1.0, System::None}}},
  };
  return table.at(kind);
}

// Every known suffix, longest first, for stripping a key to its base name.
const std::vector<std::string>& all_suffixes() {
  static const std::vector<std::string> list = [] {
    std::set<std::string> seen;
    for (Kind k : {Kind::Length, Kind::InvLength, Kind::Time, Kind::Rate, Kind::Coupling, Kind::Speed, Kind::Angle,
                   Kind::Pure})
      for (const auto& u : units_of(k)) seen.insert(u.suffix);
    std::vector<std::string> v(seen.begin(), seen.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return v;
  }();
  return list;
}

std::string base_name(const std::string& key) {
  for (const auto& s : all_suffixes()) {
    const std::string tail = "_" + s;
    if (key.size() > tail.size() && key.compare(key.size() - tail.size(), tail.size(), tail) == 0)
      return key.substr(0, key.size() - tail.size());
  }
  return key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ValidationError(path + ": " + what); }

// Remembers which unit system the first unit-bearing key used.
struct UnitTracker {
  System system = System::None;
  std::string first_key;

  void note(System s, const std::string& key) {
    if (s == System::None) return;
    if (system == System::None) {
      system = s;
      first_key = key;
      return;
    }
    if (s != system)
      fail(key, "config mixes dimensionless (_dimless) and SI-suffixed quantities (first seen: " + first_key + ")");
  }
};

class Section {
 public:
  Section(const json& obj, std::string path, UnitTracker* units) : obj_(obj), path_(std::move(path)), units_(units) {
    if (!obj_.is_object()) fail(path_, "must be an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has_quantity(const std::string& base, Kind kind) const {
    for (const auto& u : units_of(kind))
      if (obj_.contains(base + "_" + u.suffix)) return true;
    return false;
  }

  std::optional<double> quantity(const std::string& base, Kind kind) {
    std::optional<double> out;
    std::string found;
    for (const auto& u : units_of(kind)) {
      const std::string key = base + "_" + u.suffix;
      if (!obj_.contains(key)) continue;
      if (out) fail(key_path(key), "conflicts with " + key_path(found));
      const json& v = obj_.at(key);
      if (!v.is_number()) fail(key_path(key), "must be a number");
      const double x = v.get<double>();
      if (!std::isfinite(x)) fail(key_path(key), "must be finite");
      used_.insert(key);
      if (units_ != nullptr) units_->note(u.system, key_path(key));
      out = x * u.factor;
      found = key;
    }
    return out;
  }

  double quantity(const std::string& base, Kind kind, double fallback) { return quantity(base, kind).value_or(fallback); }

  double required(const std::string& base, Kind kind) {
    auto v = quantity(base, kind);
    if (!v) {
      std::string options;
      for (const auto& u : units_of(kind)) options += (options.empty() ? "" : ", ") + base + "_" + u.suffix;
      fail(key_path(base), "missing required quantity (one of: " + options + ")");
    }
    return *v;
  }

  int integer(const std::string& key, std::optional<int> fallback) {
    if (!obj_.contains(key)) {
      if (!fallback) fail(key_path(key), "missing required field");
      return *fallback;
    }
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) fail(key_path(key), "must be an integer");
    used_.insert(key);
    return v.get<int>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback) {
    if (!obj_.contains(key)) {
      if (!fallback) fail(key_path(key), "missing required field");
      return *fallback;
    }
    const json& v = obj_.at(key);
    if (!v.is_string()) fail(key_path(key), "must be a string");
    used_.insert(key);
    return v.get<std::string>();
  }

  const json* child(const std::string& key) {
    if (!obj_.contains(key)) return nullptr;
    used_.insert(key);
    return &obj_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      (void)value;
      if (!used_.count(key)) fail(key_path(key), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  UnitTracker* units_;
  std::set<std::string> used_;
};

Mode parse_mode(const std::string& s, const std::string& path) {
  if (s == "dynamics") return Mode::Dynamics;
  if (s == "dispersion") return Mode::Dispersion;
  if (s == "spectrum") return Mode::Spectrum;
  if (s == "sweep") return Mode::Sweep;
  fail(path, "unknown mode '" + s + "' (expected dynamics, dispersion, spectrum or sweep)");
}

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0)) fail(path, "must be positive");
}

DynamicsConfig parse_dynamics(Section& top, UnitTracker& units) {
  DynamicsConfig cfg;

  const json* medium = top.child("medium");
  if (!medium) fail("medium", "missing section");
  Section m(*medium, "medium", &units);
  const bool has_xi = m.has_quantity("xi", Kind::InvLength);
  const bool has_d = m.has_quantity("d", Kind::Pure);
  if (has_xi == has_d) fail("medium", "give exactly one of xi_<unit> or d_dimless");
  cfg.medium.L = m.required("L", Kind::Length);
  require_positive(cfg.medium.L, "medium.L");
  cfg.medium.xi = has_xi ? m.required("xi", Kind::InvLength) : m.required("d", Kind::Pure) / cfg.medium.L;
  cfg.medium.g2N = m.required("g2N", Kind::Coupling);
  cfg.medium.gamma_s = m.quantity("gamma_s", Kind::Rate, 0.0);
  auto c = m.quantity("c", Kind::Speed);
  m.finish();

  const json* sched = top.child("schedule");
  if (!sched) fail("schedule", "missing section");
  Section s(*sched, "schedule", &units);
  cfg.ramp_time = s.quantity("ramp_time", Kind::Time, 0.0);
  const json* segs = s.child("segments");
  if (!segs || !segs->is_array() || segs->empty()) fail("schedule.segments", "must be a non-empty array");
  for (std::size_t k = 0; k < segs->size(); ++k) {
    Section seg(segs->at(k), "schedule.segments[" + std::to_string(k) + "]", &units);
    ControlSchedule::Stage st;
    st.label = seg.text("label", "segment" + std::to_string(k));
    st.duration = seg.required("duration", Kind::Time);
    st.omega_plus = seg.quantity("omega_plus", Kind::Rate, 0.0);
    st.omega_minus = seg.quantity("omega_minus", Kind::Rate, 0.0);
    seg.finish();
    if (st.duration < 0.0) fail(seg.key_path("duration"), "must be non-negative");
    if (st.omega_plus < 0.0 || st.omega_minus < 0.0) fail(seg.key_path("omega"), "Rabi frequencies must be non-negative");
    if (st.duration > 0.0) cfg.stages.push_back(st);  // zero-length stages drop out (sweeps start at 0)
  }
  if (cfg.stages.empty()) fail("schedule.segments", "all segments have zero duration");
  s.finish();

  const json* input = top.child("input");
  if (!input) fail("input", "missing section");
  Section in(*input, "input", &units);
  const double amp = in.quantity("amplitude", Kind::Pure, 1.0);
  const double phase = in.quantity("phase", Kind::Angle, 0.0);
  cfg.input.amplitude = std::polar(amp, phase);
  cfg.input.t0 = in.required("t0", Kind::Time);
  const bool has_sigma = in.has_quantity("sigma_t", Kind::Time);
  const bool has_fwhm = in.has_quantity("fwhm", Kind::Time);
  if (has_sigma == has_fwhm) fail("input", "give exactly one of sigma_t_<unit> or fwhm_<unit>");
  // fwhm is the full width at half maximum of the intensity |E|^2.
  cfg.input.sigma_t = has_sigma ? in.required("sigma_t", Kind::Time)
                                : in.required("fwhm", Kind::Time) / (2.0 * std::sqrt(std::log(2.0)));
  const std::string port = in.text("port", "forward");
  if (port == "forward") cfg.input.port = Port::Forward;
  else if (port == "backward") cfg.input.port = Port::Backward;
  else fail("input.port", "must be 'forward' or 'backward'");
  in.finish();

  const json* grid = top.child("grid");
  if (!grid) fail("grid", "missing section");
  Section g(*grid, "grid", &units);
  cfg.grid.nz = g.integer("Nz", std::nullopt);
  cfg.grid.dt = g.quantity("dt", Kind::Time, 0.0);
  g.finish();

  cfg.dimensionless = units.system == System::Dimless;
  if (c) cfg.medium.c = *c;
  else if (cfg.dimensionless) fail("medium.c_dimless", "required in dimensionless configs");
  else cfg.medium.c = 299792458.0;

  cfg.medium.validate();
  cfg.input.validate();
  cfg.grid.validate();
  (void)cfg.schedule();  // validates segment layout and ramps
  return cfg;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  if (n == 1) return {a};
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

DispersionConfig parse_dispersion(Section& top, UnitTracker& units) {
  DispersionConfig cfg;
  const json* sec = top.child("dispersion");
  if (!sec) fail("dispersion", "missing section");
  Section d(*sec, "dispersion", &units);
  const bool has_alpha = d.has_quantity("alpha_plus", Kind::Pure) || d.has_quantity("alpha_minus", Kind::Pure);
  const bool has_omega = d.has_quantity("omega_plus", Kind::Rate) || d.has_quantity("omega_minus", Kind::Rate);
  if (has_alpha == has_omega) fail("dispersion", "give either alpha_plus/alpha_minus or omega_plus/omega_minus");
  if (has_alpha) {
    cfg.alpha_plus = d.required("alpha_plus", Kind::Pure);
    cfg.alpha_minus = d.required("alpha_minus", Kind::Pure);
    if (cfg.alpha_plus < 0.0 || cfg.alpha_minus < 0.0 || std::abs(cfg.alpha_plus + cfg.alpha_minus - 1.0) > 1e-12)
      fail("dispersion.alpha_plus", "weights must be non-negative and sum to 1");
  } else {
    const Alphas a = compute_alphas(d.quantity("omega_plus", Kind::Rate, 0.0), d.quantity("omega_minus", Kind::Rate, 0.0));
    cfg.alpha_plus = a.plus;
    cfg.alpha_minus = a.minus;
  }
  cfg.xi = d.required("xi", Kind::InvLength);
  require_positive(cfg.xi, "dispersion.xi");
  auto c = d.quantity("c", Kind::Speed);
  const double k_min = d.required("k_min", Kind::InvLength);
  const double k_max = d.required("k_max", Kind::InvLength);
  const int count = d.integer("k_count", 201);
  if (count < 1) fail("dispersion.k_count", "must be at least 1");
  cfg.ks = linspace(k_min, k_max, count);
  if (const json* cycles = d.child("plane_wave_cycles")) {
    if (!cycles->is_array()) fail("dispersion.plane_wave_cycles", "must be an array of integers");
    for (const auto& v : *cycles) {
      if (!v.is_number_integer()) fail("dispersion.plane_wave_cycles", "must be an array of integers");
      cfg.plane_wave_cycles.push_back(v.get<int>());
    }
    cfg.L = d.required("L", Kind::Length);
    require_positive(cfg.L, "dispersion.L");
    cfg.nz = d.integer("Nz", 256);
    if (cfg.nz < 16) fail("dispersion.Nz", "must be at least 16");
  }
  d.finish();
  cfg.c = c ? *c : (units.system == System::Dimless ? 1.0 : 299792458.0);
  require_positive(cfg.c, "dispersion.c");
  return cfg;
}

SpectrumConfig parse_spectrum(Section& top, UnitTracker& units) {
  SpectrumConfig cfg;
  const json* sec = top.child("spectrum");
  if (!sec) fail("spectrum", "missing section");
  Section s(*sec, "spectrum", &units);
  cfg.control.omega_plus = s.required("omega_plus", Kind::Rate);
  cfg.control.omega_minus = s.quantity("omega_minus", Kind::Rate, 0.0);
  cfg.control.phi = s.quantity("phi", Kind::Angle, 0.0);
  cfg.control.delta_beta = s.quantity("delta_beta", Kind::InvLength, 0.0);
  cfg.atom.gamma_e = s.quantity("gamma_e", Kind::Rate, cfg.atom.gamma_e);
  cfg.atom.gamma_s = s.quantity("gamma_s", Kind::Rate, 0.0);
  cfg.atom.d = s.required("d", Kind::Pure);
  cfg.atom.L = s.required("L", Kind::Length);
  const double lo = s.required("detuning_min", Kind::Rate);
  const double hi = s.required("detuning_max", Kind::Rate);
  const int count = s.integer("detuning_count", 601);
  if (count < 1) fail("spectrum.detuning_count", "must be at least 1");
  cfg.detunings = linspace(lo, hi, count);
  cfg.options.harmonic_order = s.integer("harmonic_order", 1);
  cfg.compare_order = s.integer("compare_harmonic_order", 3);
  cfg.options.wavelength = s.quantity("wavelength", Kind::Length, cfg.options.wavelength);
  s.finish();
  if (cfg.options.harmonic_order < 1) fail("spectrum.harmonic_order", "must be at least 1");
  if (cfg.compare_order < 1) fail("spectrum.compare_harmonic_order", "must be at least 1");
  cfg.atom.validate();
  cfg.control.validate();
  return cfg;
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Dynamics: return "dynamics";
    case Mode::Dispersion: return "dispersion";
    case Mode::Spectrum: return "spectrum";
    case Mode::Sweep: return "sweep";
  }
  return "unknown";
}

json merge_config(json base, const json& patch) {
  if (!base.is_object() || !patch.is_object()) return patch;
  for (const auto& [key, value] : patch.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object()) {
      base[key] = merge_config(base[key], value);
      continue;
    }
    const std::string stem = base_name(key);
    std::vector<std::string> drop;
    for (const auto& [other, unused] : base.items()) {
      (void)unused;
      if (other != key && base_name(other) == stem && stem != other) drop.push_back(other);
    }
    for (const auto& k : drop) base.erase(k);
    base[key] = value;
  }
  return base;
}

void set_config_path(json& doc, const std::string& path, const json& value) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string tok;
  while (std::getline(ss, tok, '.')) parts.push_back(tok);
  if (parts.empty()) fail("sweep.parameter", "empty path");

  json* node = &doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (node->is_object()) {
      if (!node->contains(p)) fail("sweep.parameter", "no config path '" + path + "' (missing '" + p + "')");
      node = &(*node)[p];
    } else if (node->is_array()) {
      json* found = nullptr;
      for (auto& el : *node)
        if (el.is_object() && el.contains("label") && el["label"] == p) found = &el;
      if (!found && !p.empty() && std::all_of(p.begin(), p.end(), [](unsigned char ch) { return std::isdigit(ch) != 0; })) {
        const auto idx = std::stoul(p);
        if (idx < node->size()) found = &(*node)[idx];
      }
      if (!found) fail("sweep.parameter", "no element '" + p + "' in '" + path + "'");
      node = found;
    } else {
      fail("sweep.parameter", "'" + path + "' descends into a scalar");
    }
  }
  if (!node->is_object()) fail("sweep.parameter", "'" + path + "' does not end at an object field");
  const std::string& leaf = parts.back();
  const std::string stem = base_name(leaf);
  bool exists = node->contains(leaf);
  std::vector<std::string> drop;
  for (const auto& [other, unused] : node->items()) {
    (void)unused;
    if (other != leaf && stem != other && base_name(other) == stem) drop.push_back(other);
  }
  if (!exists && drop.empty()) fail("sweep.parameter", "no config path '" + path + "'");
  for (const auto& k : drop) node->erase(k);
  (*node)[leaf] = value;
}

RunConfig parse_config_json(const json& doc_in) {
  if (!doc_in.is_object()) fail("config", "top level must be an object");
  json doc = doc_in;
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) fail("preset", "must be a string");
    const std::string name = doc["preset"].get<std::string>();
    json patch = doc;
    patch.erase("preset");
    doc = merge_config(preset_json(name), patch);
    if (!doc.contains("outputs") || !doc["outputs"].contains("stem")) doc["outputs"]["stem"] = name;
  }

  RunConfig cfg;
  cfg.effective = doc;
  UnitTracker units;
  Section top(doc, "", &units);
  cfg.mode = parse_mode(top.text("mode", std::nullopt), "mode");
  cfg.caption = top.text("caption", "");
  cfg.threads = top.integer("threads", 1);
  if (cfg.threads < 1) fail("threads", "must be at least 1");

  if (const json* out = top.child("outputs")) {
    Section o(*out, "outputs", nullptr);
    cfg.outputs.dir = o.text("dir", cfg.outputs.dir.string());
    cfg.outputs.stem = o.text("stem", cfg.outputs.stem);
    cfg.outputs.snapshot_z_stride = o.integer("snapshot_z_stride", 1);
    cfg.outputs.snapshot_t_stride = o.integer("snapshot_t_stride", 1);
    const int count = o.integer("snapshot_count", 100);
    o.finish();
    if (cfg.outputs.snapshot_z_stride < 1) fail("outputs.snapshot_z_stride", "must be at least 1");
    if (cfg.outputs.snapshot_t_stride < 1) fail("outputs.snapshot_t_stride", "must be at least 1");
    if (count < 0) fail("outputs.snapshot_count", "must be non-negative");
    if (cfg.outputs.stem.empty() || cfg.outputs.stem.find('/') != std::string::npos)
      fail("outputs.stem", "must be a non-empty file-name stem");
    cfg.effective["outputs"]["snapshot_count"] = count;
  }
  const int snapshot_count = cfg.effective.value("outputs", json::object()).value("snapshot_count", 100);

  Mode inner = cfg.mode;
  if (cfg.mode == Mode::Sweep) {
    const json* sw = top.child("sweep");
    if (!sw) fail("sweep", "missing section");
    Section s(*sw, "sweep", nullptr);
    SweepConfig sweep;
    sweep.parameter = s.text("parameter", std::nullopt);
    const json* values = s.child("values");
    if (!values || !values->is_array() || values->empty()) fail("sweep.values", "must be a non-empty array");
    sweep.values.assign(values->begin(), values->end());
    sweep.mode = parse_mode(s.text("mode", "dynamics"), "sweep.mode");
    if (sweep.mode == Mode::Sweep) fail("sweep.mode", "sweeps cannot nest");
    s.finish();
    json probe = doc;
    set_config_path(probe, sweep.parameter, sweep.values.front());
    inner = sweep.mode;
    cfg.sweep = sweep;
  }

  switch (inner) {
    case Mode::Dynamics:
      cfg.dynamics = parse_dynamics(top, units);
      cfg.dynamics->run.snapshot_count = snapshot_count;
      break;
    case Mode::Dispersion: cfg.dispersion = parse_dispersion(top, units); break;
    case Mode::Spectrum: cfg.spectrum = parse_spectrum(top, units); break;
    case Mode::Sweep: break;
  }
  top.finish();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
  return parse_config_json(doc);
}

std::vector<RunConfig> expand_sweep(const RunConfig& config) {
  if (!config.sweep) return {config};
  std::vector<RunConfig> out;
  const auto& sw = *config.sweep;
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    json doc = config.effective;
    doc.erase("sweep");
    doc["mode"] = to_string(sw.mode);
    set_config_path(doc, sw.parameter, sw.values[i]);
    char idx[16];
    std::snprintf(idx, sizeof idx, "%03zu", i);
    doc["outputs"]["stem"] = config.outputs.stem + "_" + idx;
    doc["outputs"]["dir"] = config.outputs.dir.string();
    out.push_back(parse_config_json(doc));
  }
  return out;
}

std::string config_hash(const json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace slp::cli
