#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "slp/dynamics.hpp"

namespace slp {

namespace {

constexpr double kSafety = 0.9;

struct Sampler {
  const MediumParams& params;
  const SignalInput& input;
  int nz;
  double dz_phys;
  Trajectory& traj;

  BoundaryInputs inputs_at(double t, double omega_plus, double omega_minus) const {
    BoundaryInputs in;
    const Complex env = input.envelope(t);
    const double root = std::sqrt(params.g2N);
    if (input.port == Port::Forward && omega_plus > 0.0) in.forward = root * env / omega_plus;
    if (input.port == Port::Backward && omega_minus > 0.0) in.backward = root * env / omega_minus;
    return in;
  }

  PolaritonState state(const ArrayXc& S, double t, double tau, double op, double om) const {
    if (op == 0.0 && om == 0.0) {
      PolaritonState st;
      st.S = S;
      st.psi_plus = S;
      st.psi_minus = S;
      st.D = ArrayXc::Zero(S.size());
      st.t = t;
      st.tau = tau;
      return st;
    }
    const Alphas a = compute_alphas(op, om);
    const auto D = slave_difference_edges(S, a, params.optical_depth(), inputs_at(t, op, om));
    PolaritonState st = compose_state(S, D.at_nodes(), a, t, tau);
    // Boundary nodes carry the exact edge values of D.
    const Eigen::Index n = S.size();
    st.psi_plus[n - 1] = S[n - 1] + a.minus * D.edges[n];
    st.psi_minus[0] = S[0] - a.plus * D.edges[0];
    return st;
  }

  void record(const PolaritonState& st, int stage, double op, double om) {
    const Eigen::Index n = st.S.size();
    traj.t.push_back(st.t);
    traj.tau.push_back(st.tau);
    traj.stage.push_back(stage);
    const double g2N = params.g2N;
    const bool on = op > 0.0 || om > 0.0;
    traj.flux_forward.push_back(on ? op * op * std::norm(st.psi_plus[n - 1]) / g2N : 0.0);
    traj.flux_backward.push_back(on ? om * om * std::norm(st.psi_minus[0]) / g2N : 0.0);
    traj.spin_norm.push_back(spin_norm(st.S, dz_phys));
    const Moments m = intensity_moments(traj.z, st.S);
    traj.centroid.push_back(m.centroid);
    traj.width.push_back(m.width);
    double intensity = 0.0;
    if (on) intensity = (op * op * spin_norm(st.psi_plus, dz_phys) + om * om * spin_norm(st.psi_minus, dz_phys)) / g2N;
    traj.intensity_total.push_back(intensity);
  }
};

double step_cap(const ControlSchedule& schedule, const SignalInput& input) {
  const double span = schedule.end() - schedule.start();
  double cap = std::min(input.sigma_t / 20.0, span / 200.0);
  if (schedule.ramp_time() > 0.0) cap = std::min(cap, schedule.ramp_time() / 4.0);
  return cap;
}

}  // namespace

Trajectory run_protocol(const MediumParams& params, const ControlSchedule& schedule, const SignalInput& input,
                        const Grid& grid, const RunOptions& options) {
  params.validate();
  input.validate();
  grid.validate();
  if (schedule.segments().empty()) throw ValidationError("schedule needs at least one segment");

  Trajectory traj;
  const int n = grid.nz;
  const double L = params.L;
  const double d = params.optical_depth();
  const double dz = grid_spacing(n, Boundary::Open);
  const double dz_phys = grid.dz(L);
  traj.z = ArrayXr::LinSpaced(n, 0.0, L);
  traj.c = params.c;
  traj.input_energy = input.energy();
  for (const auto& seg : schedule.segments()) {
    traj.stage_markers.push_back(seg.t_start);
    traj.stage_labels.push_back(seg.label);
    traj.stage_kinds.push_back(classify(seg));
  }
  traj.stage_markers.push_back(schedule.end());

  if (dz_phys > 1.0 / params.xi) {
    std::ostringstream msg;
    msg << "grid too coarse: dz = " << dz_phys << " exceeds the absorption length 1/xi = " << 1.0 / params.xi;
    traj.warnings.push_back(msg.str());
  }
  if (input.t0 - 3.0 * input.sigma_t < schedule.start() || input.t0 + 3.0 * input.sigma_t > schedule.end())
    traj.warnings.push_back("input pulse extends beyond the schedule span");

  Sampler sampler{params, input, n, dz_phys, traj};
  const bool fixed = grid.dt > 0.0;
  const double nominal = fixed ? grid.dt : step_cap(schedule, input);
  const auto breaks = schedule.breakpoints();
  const double t_end = schedule.end();
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end - schedule.start()));

  const int snap_count = std::max(options.snapshot_count, 0);
  std::vector<double> snap_times;
  for (int k = 0; k < snap_count; ++k) {
    const double f = snap_count == 1 ? 0.0 : static_cast<double>(k) / (snap_count - 1);
    snap_times.push_back(schedule.start() + f * (t_end - schedule.start()));
  }
  std::size_t next_snap = 0;

  ArrayXc S = ArrayXc::Zero(n);
  double t = schedule.start();
  double tau = 0.0;
  bool warned_dark_input = false;

  auto sample = [&](double op, double om, int stage) {
    const PolaritonState st = sampler.state(S, t, tau, op, om);
    sampler.record(st, stage, op, om);
    while (next_snap < snap_times.size() && snap_times[next_snap] <= t + eps) {
      traj.snapshots.push_back(st);
      traj.snapshot_index.push_back(traj.size() - 1);
      ++next_snap;
    }
  };

  {
    const auto [op, om] = schedule.omegas_from(t, t);
    sample(op, om, static_cast<int>(schedule.segment_at(t)));
  }

  while (t < t_end - eps) {
    const double next_break = *std::upper_bound(breaks.begin(), breaks.end(), t + eps);
    double h = std::min(nominal, next_break - t);
    if (next_break - t - h < eps) h = next_break - t;

    auto [iplus, iminus] = schedule.intensity_integrals(t, t + h);
    double total = iplus + iminus;
    const double dz_limit_scale = params.c / (params.g2N * L);
    if (total > 0.0) {
      for (int guard = 0;; ++guard) {
        const Alphas a = compute_alphas(std::sqrt(iplus), std::sqrt(iminus));
        const double limit = kSafety * stable_step(a, d, dz);
        const double dtau = dz_limit_scale * total;
        if (dtau <= limit) break;
        if (fixed) {
          std::ostringstream msg;
          msg << "grid.dt = " << grid.dt << " violates the stability bound near t = " << t
              << " (scaled step " << dtau << " > " << limit << ")";
          throw StepSizeError(msg.str());
        }
        if (guard > 60) throw NumericalError("could not find a stable step size");
        h *= 0.99 * limit / dtau;
        std::tie(iplus, iminus) = schedule.intensity_integrals(t, t + h);
        total = iplus + iminus;
      }
    }

    const double tm = t + 0.5 * h;
    const int stage = static_cast<int>(schedule.segment_at(tm));
    const auto [op_m, om_m] = schedule.omegas_from(tm, tm);
    const bool dark = (input.port == Port::Forward ? op_m : om_m) == 0.0;
    if (dark && !warned_dark_input && std::abs(input.envelope(tm)) > 1e-2 * std::abs(input.amplitude)) {
      traj.warnings.push_back("signal arrives while its control beam is off; that part is not coupled in");
      warned_dark_input = true;
    }
    if (total > 0.0) {
      const Alphas a = compute_alphas(std::sqrt(iplus), std::sqrt(iminus));
      const BoundaryInputs in = sampler.inputs_at(tm, op_m, om_m);
      const double dtau = dz_limit_scale * total;
      const DifferenceField D = slave_difference_edges(S, a, d, in);
      S = advance_spin(S, D, a, d, dtau, in);
      tau += total / params.g2N;
    }
    S = apply_decoherence(S, params.gamma_s, h);
    t = (std::abs(next_break - (t + h)) < eps) ? next_break : t + h;

    const auto [op_l, om_l] = schedule.omegas_from(t, tm);
    sample(op_l, om_l, stage);
    const int after = static_cast<int>(schedule.segment_at(t));
    if (after != stage && t < t_end - eps) {
      const auto [op_r, om_r] = schedule.omegas_from(t, t);
      sample(op_r, om_r, after);
    }
  }

  // Take any snapshots whose nominal time rounded past the last step.
  while (next_snap < snap_times.size()) {
    traj.snapshots.push_back(traj.snapshots.empty() ? sampler.state(S, t, tau, 0.0, 0.0) : traj.snapshots.back());
    traj.snapshot_index.push_back(traj.size() - 1);
    ++next_snap;
  }
  return traj;
}

}  // namespace slp
