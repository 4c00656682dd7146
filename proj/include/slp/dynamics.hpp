#pragma once

#include <string>
#include <vector>

#include "slp/core_model.hpp"
#include "slp/types.hpp"

namespace slp {

// The solver works on a dimensionless grid: z in units of the medium length L
// and scaled time in units of L/c, so c = 1 and the absorption coefficient
// enters only through the optical depth d = xi L.
//
// The two polariton equations have a singular time-derivative matrix. Summing
// them gives a pure constraint on the difference mode D = Psi_+ - Psi_-:
//
//   (alpha_- - alpha_+) dD/dz + d D = -2 dS/dz,
//
// and the spin wave S = alpha_+ Psi_+ + alpha_- Psi_- obeys the conservation law
//
//   dS/dtau + dF/dz = 0,   F = (alpha_+ - alpha_-) S + 2 alpha_+ alpha_- D
//                            = alpha_+ Psi_+ - alpha_- Psi_-.
//
// S is the only dynamic field; D is slaved to it at every stage of every step.

enum class Boundary { Open, Periodic };

/// Incoming polariton amplitudes: Psi_+(0) at the forward port and Psi_-(L) at
/// the backward port. Ignored on periodic grids.
struct BoundaryInputs {
  Complex forward{0.0, 0.0};
  Complex backward{0.0, 0.0};
};

/// Difference mode on the staggered layout used by the flux update.
///
/// Open grids with N nodes store N + 1 values: D(0), the N - 1 cell faces
/// z = (j - 1/2) dz, and D(L). Periodic grids with N nodes store N faces, face j
/// lying between nodes j - 1 and j.
struct DifferenceField {
  ArrayXc edges;
  Boundary boundary = Boundary::Open;

  /// D at the grid nodes: face averages inside, boundary values at the ends.
  ArrayXc at_nodes() const;
};

/// Node spacing of a dimensionless grid with `nz` nodes.
double grid_spacing(Eigen::Index nz, Boundary boundary);

/// Solves the difference-mode constraint for D given S.
///
/// The sweep runs toward -z when alpha_+ > alpha_- and toward +z otherwise,
/// starting from the boundary condition at the far port; within each cell the
/// forcing dS/dz is taken as linear and integrated exactly against the
/// exponential kernel. When |alpha_+ - alpha_-| < 1e-9 the closure is algebraic,
/// D = -(2/d) dS/dz, and both boundary conditions fix D at the ends.
/// Throws ControlsOffError if both weights are zero.
DifferenceField slave_difference_edges(const ArrayXc& S, Alphas alphas, double optical_depth,
                                       BoundaryInputs inputs = {}, Boundary boundary = Boundary::Open);

/// Node-valued difference mode, see slave_difference_edges.
ArrayXc slave_difference(const ArrayXc& S, Alphas alphas, double optical_depth, BoundaryInputs inputs = {},
                         Boundary boundary = Boundary::Open);

/// Largest stable scaled-time step on a grid of spacing dz.
///
/// Equals 1 / |omega(k)| at k = 2/dz using the continuum dispersion relation.
/// This is dz/2 for pure advection and d dz^2 / 4 for the balanced diffusive
/// limit, and interpolates smoothly in between.
double stable_step(Alphas alphas, double optical_depth, double dz);

/// Advances S by one scaled-time step `dtau` with third-order SSP Runge-Kutta.
///
/// `D` must be the slaved difference field of `S` (the first stage uses it; the
/// later stages re-slave). Advection uses third-order upwind-biased face values,
/// the D term central face values. Throws StepSizeError if dtau exceeds
/// stable_step.
ArrayXc advance_spin(const ArrayXc& S, const DifferenceField& D, Alphas alphas, double optical_depth,
                     double dtau, BoundaryInputs inputs = {}, Boundary boundary = Boundary::Open);

/// S * exp(-gamma_s dt) with dt in real (unscaled) time.
ArrayXc apply_decoherence(const ArrayXc& S, double gamma_s, double dt);

/// Fields of the medium at one instant, on the node grid.
struct PolaritonState {
  ArrayXc S;
  ArrayXc psi_plus;
  ArrayXc psi_minus;
  ArrayXc D;
  double t = 0.0;
  double tau = 0.0;
};

/// Builds Psi_pm = S + alpha_- D, S - alpha_+ D.
PolaritonState compose_state(const ArrayXc& S, const ArrayXc& D, Alphas alphas, double t, double tau);

struct RunOptions {
  int snapshot_count = 100;  ///< snapshots spread evenly over the schedule
};

/// Time-ordered record of one protocol run.
///
/// The series hold one entry per solver step (plus the initial sample) on one
/// clock. Fluxes are |E_+(L,t)|^2 and |E_-(0,t)|^2; spin_norm is the integral
/// of |S|^2 over physical z, so spin_norm / c is the field energy it carries.
struct Trajectory {
  std::vector<double> t;
  std::vector<double> tau;
  std::vector<int> stage;
  std::vector<double> flux_forward;
  std::vector<double> flux_backward;
  std::vector<double> spin_norm;
  std::vector<double> centroid;
  std::vector<double> width;
  std::vector<double> intensity_total;

  std::vector<PolaritonState> snapshots;
  std::vector<std::size_t> snapshot_index;  ///< sample index each snapshot was taken at
  std::vector<double> stage_markers;        ///< segment start times, then the schedule end
  std::vector<std::string> stage_labels;
  std::vector<StageKind> stage_kinds;
  std::vector<std::string> warnings;

  ArrayXr z;  ///< physical node positions
  double c = 1.0;
  double input_energy = 0.0;

  std::size_t size() const { return t.size(); }
};

/// Runs a multi-stage protocol: single-control propagation, frozen storage
/// (both controls off), both-on hold and release, with ramps resolved in real
/// time. The forward (backward) input enters as Psi_+(0) (Psi_-(L)) converted
/// from the field envelope through the local control.
///
/// Throws StepSizeError if a fixed grid.dt violates the stability bound.
Trajectory run_protocol(const MediumParams& params, const ControlSchedule& schedule, const SignalInput& input,
                        const Grid& grid, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Observables

/// Trapezoid integral of |S|^2 over a uniform grid of spacing dz.
double spin_norm(const ArrayXc& S, double dz);

/// Centroid and RMS width of the |S|^2 distribution.
struct Moments {
  double mass = 0.0;
  double centroid = 0.0;
  double width = 0.0;
};
Moments intensity_moments(const ArrayXr& z, const ArrayXc& S);

/// Moments of Re S treated as a (signed) distribution. For a real pulse the
/// variance grows by exactly 2 D_eff tau under the polariton evolution,
/// whatever the shape, since only omega''(0) enters the second cumulant.
Moments amplitude_moments(const ArrayXr& z, const ArrayXc& S);

struct SnapshotObservables {
  double t = 0.0;
  double centroid = 0.0;
  double width = 0.0;
  double spin_norm = 0.0;
  double intensity_total = 0.0;
};

struct StageEnergy {
  std::string label;
  double t_start = 0.0;
  double t_end = 0.0;
  double forward = 0.0;   ///< time-integrated |E_+(L)|^2
  double backward = 0.0;  ///< time-integrated |E_-(0)|^2
  double spin_norm_start = 0.0;
  double spin_norm_end = 0.0;
};

struct ObservableSet {
  std::vector<SnapshotObservables> snapshots;
  std::vector<StageEnergy> stages;
  double input_energy = 0.0;
  /// Stored energy at the start of the first frozen stage over the input
  /// energy; NaN when the protocol has no frozen stage.
  double stored_fraction = 0.0;
};

ObservableSet observables(const Trajectory& traj);

}  // namespace slp
