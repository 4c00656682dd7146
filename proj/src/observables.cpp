#include <algorithm>
#include <cmath>
#include <limits>

#include "slp/dynamics.hpp"

namespace slp {

namespace {

Moments moments_of(const ArrayXr& z, const ArrayXr& w) {
  Moments m;
  const Eigen::Index n = w.size();
  if (n < 2) return m;
  const double dz = z[1] - z[0];
  ArrayXr tw = w;
  tw[0] *= 0.5;
  tw[n - 1] *= 0.5;
  const double mass = tw.sum() * dz;
  m.mass = mass;
  if (!(mass > 0.0)) return m;
  const double mean = (tw * z).sum() * dz / mass;
  const double var = (tw * (z - mean).square()).sum() * dz / mass;
  m.centroid = mean;
  m.width = std::sqrt(std::max(var, 0.0));
  return m;
}

}  // namespace

double spin_norm(const ArrayXc& S, double dz) {
  const Eigen::Index n = S.size();
  if (n == 0) return 0.0;
  if (n == 1) return 0.0;
  const ArrayXr w = S.abs2();
  return dz * (w.sum() - 0.5 * (w[0] + w[n - 1]));
}

Moments intensity_moments(const ArrayXr& z, const ArrayXc& S) { return moments_of(z, S.abs2()); }

Moments amplitude_moments(const ArrayXr& z, const ArrayXc& S) { return moments_of(z, S.real()); }

ObservableSet observables(const Trajectory& traj) {
  ObservableSet out;
  out.input_energy = traj.input_energy;
  out.stored_fraction = std::numeric_limits<double>::quiet_NaN();
  if (traj.size() == 0) return out;

  const double dz = traj.z.size() > 1 ? traj.z[1] - traj.z[0] : 0.0;
  for (const auto& st : traj.snapshots) {
    SnapshotObservables o;
    o.t = st.t;
    const Moments m = intensity_moments(traj.z, st.S);
    o.centroid = m.centroid;
    o.width = m.width;
    o.spin_norm = spin_norm(st.S, dz);
    out.snapshots.push_back(o);
  }
  // The intensity of a snapshot needs the controls, which the trajectory
  // series already folded in.
  for (std::size_t k = 0; k < traj.snapshots.size() && k < traj.snapshot_index.size(); ++k)
    out.snapshots[k].intensity_total = traj.intensity_total[traj.snapshot_index[k]];

  const std::size_t n_stages = traj.stage_labels.size();
  out.stages.resize(n_stages);
  for (std::size_t s = 0; s < n_stages; ++s) {
    out.stages[s].label = traj.stage_labels[s];
    out.stages[s].t_start = traj.stage_markers[s];
    out.stages[s].t_end = traj.stage_markers[s + 1];
    out.stages[s].spin_norm_start = std::numeric_limits<double>::quiet_NaN();
    out.stages[s].spin_norm_end = std::numeric_limits<double>::quiet_NaN();
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto s = static_cast<std::size_t>(traj.stage[i]);
    if (s >= n_stages) continue;
    auto& e = out.stages[s];
    if (std::isnan(e.spin_norm_start)) e.spin_norm_start = traj.spin_norm[i];
    e.spin_norm_end = traj.spin_norm[i];
    if (i == 0) continue;
    const double h = traj.t[i] - traj.t[i - 1];
    e.forward += 0.5 * h * (traj.flux_forward[i] + traj.flux_forward[i - 1]);
    e.backward += 0.5 * h * (traj.flux_backward[i] + traj.flux_backward[i - 1]);
  }

  for (std::size_t s = 0; s < n_stages && s < traj.stage_kinds.size(); ++s) {
    if (traj.stage_kinds[s] != StageKind::Frozen) continue;
    if (traj.input_energy > 0.0 && !std::isnan(out.stages[s].spin_norm_start))
      out.stored_fraction = out.stages[s].spin_norm_start / traj.c / traj.input_energy;
    break;
  }
  return out;
}

}  // namespace slp
