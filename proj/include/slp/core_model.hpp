#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "slp/errors.hpp"
#include "slp/types.hpp"

namespace slp {

/// Physical constants of the atomic medium, in any consistent unit system
/// (SI by convention: 1/m, rad^2/s^2, m/s, m, rad/s).
struct MediumParams {
  double xi = 0.0;       ///< resonant intensity absorption coefficient per unit length
  double g2N = 0.0;      ///< collective coupling g^2 N
  double c = 0.0;        ///< vacuum speed of light
  double L = 0.0;        ///< medium length
  double gamma_s = 0.0;  ///< spin decoherence rate

  double optical_depth() const { return xi * L; }

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

/// Weights of the forward and backward polariton components in the spin wave.
template <typename Scalar>
struct AlphaPair {
  Scalar plus;
  Scalar minus;

  Scalar difference() const { return plus - minus; }
  Scalar product() const { return plus * minus; }
};

using Alphas = AlphaPair<double>;

/// alpha_pm = |Omega_pm|^2 / (|Omega_+|^2 + |Omega_-|^2).
///
/// The larger weight is formed as one minus the smaller so that the pair sums
/// to exactly one in floating point. Throws ControlsOffError if both are zero.
template <typename Scalar>
AlphaPair<Scalar> compute_alphas(Scalar omega_plus, Scalar omega_minus) {
  const Scalar p2 = omega_plus * omega_plus;
  const Scalar m2 = omega_minus * omega_minus;
  const Scalar total = p2 + m2;
  if (!(total > Scalar(0))) throw ControlsOffError();
  if (p2 <= m2) {
    const Scalar plus = p2 / total;
    return {plus, Scalar(1) - plus};
  }
  const Scalar minus = m2 / total;
  return {Scalar(1) - minus, minus};
}

/// v_g = c (|Omega_+|^2 - |Omega_-|^2) / g^2 N, positive toward +z.
template <typename Scalar>
Scalar group_velocity(Scalar omega_plus, Scalar omega_minus, Scalar g2N, Scalar c) {
  return c * (omega_plus * omega_plus - omega_minus * omega_minus) / g2N;
}

struct ControlSegment {
  std::string label;
  double t_start = 0.0;
  double t_end = 0.0;
  double omega_plus = 0.0;   ///< plateau Rabi frequency of the forward control
  double omega_minus = 0.0;  ///< plateau Rabi frequency of the backward control
};

/// Piecewise-linear envelopes Omega_+(t), Omega_-(t).
///
/// Each segment holds a plateau level. At the start of every segment after the
/// first, both envelopes ramp linearly from the previous plateau over
/// `ramp_time`. A zero ramp time gives instantaneous switching.
class ControlSchedule {
 public:
  struct Piece {
    double t0, t1;
    double plus0, plus1;
    double minus0, minus1;
  };

  ControlSchedule() = default;
  ControlSchedule(std::vector<ControlSegment> segments, double ramp_time);

  /// Builds contiguous segments starting at `t_start` from (label, duration,
  /// Omega_+, Omega_-) tuples.
  struct Stage {
    std::string label;
    double duration;
    double omega_plus;
    double omega_minus;
  };
  static ControlSchedule from_stages(const std::vector<Stage>& stages, double ramp_time,
                                     double t_start = 0.0);

  const std::vector<ControlSegment>& segments() const { return segments_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  double ramp_time() const { return ramp_time_; }
  double start() const { return segments_.front().t_start; }
  double end() const { return segments_.back().t_end; }

  double omega_plus(double t) const;
  double omega_minus(double t) const;

  /// (Omega_+, Omega_-) at t using the linear piece that contains `reference`.
  /// Gives the left limit at a jump when reference < t.
  std::pair<double, double> omegas_from(double t, double reference) const;

  /// Index of the segment containing t (right-continuous at boundaries).
  std::size_t segment_at(double t) const;

  /// Exact integrals of Omega_+^2 and Omega_-^2 over [t0, t1].
  std::pair<double, double> intensity_integrals(double t0, double t1) const;

  /// Times where an envelope changes slope or jumps, including start and end.
  std::vector<double> breakpoints() const;

 private:
  std::size_t piece_at(double t) const;

  std::vector<ControlSegment> segments_;
  std::vector<Piece> pieces_;
  double ramp_time_ = 0.0;
};

enum class StageKind { Frozen, Forward, Backward, Hold, Mixed };

/// Classifies a plateau: both off, one beam only, equal beams, or unequal beams.
StageKind classify(const ControlSegment& segment);
const char* to_string(StageKind kind);

/// tau(t) = integral from schedule start to t of (Omega_+^2 + Omega_-^2) / g^2 N.
double scaled_time(double t, const ControlSchedule& schedule, double g2N);

enum class Port { Forward, Backward };

/// Gaussian signal pulse entering through one port.
struct SignalInput {
  Complex amplitude{1.0, 0.0};
  double t0 = 0.0;
  double sigma_t = 1.0;  ///< RMS duration of the amplitude envelope
  Port port = Port::Forward;

  Complex envelope(double t) const {
    const double x = (t - t0) / sigma_t;
    return amplitude * std::exp(-0.5 * x * x);
  }
  /// Integral of |E_in(t)|^2 over all time.
  double energy() const { return std::norm(amplitude) * sigma_t * std::sqrt(kPi); }

  void validate() const;
};

struct Grid {
  int nz = 0;
  double dt = 0.0;  ///< fixed real-time step; zero selects the step automatically

  double dz(double length) const { return length / static_cast<double>(nz - 1); }
  void validate() const;
};

/// E_pm = Omega_pm Psi_pm / sqrt(g^2 N). A channel whose control is off maps to
/// a zero field.
std::pair<ArrayXc, ArrayXc> polariton_to_fields(const ArrayXc& psi_plus, const ArrayXc& psi_minus,
                                                double omega_plus, double omega_minus, double g2N);

/// Inverse of polariton_to_fields on channels with nonzero control; channels
/// with zero control map to zero.
std::pair<ArrayXc, ArrayXc> fields_to_polariton(const ArrayXc& e_plus, const ArrayXc& e_minus,
                                                double omega_plus, double omega_minus, double g2N);

namespace units {

inline double mhz(double v) { return kTwoPi * 1e6 * v; }  // angular, rad/s
inline double khz(double v) { return kTwoPi * 1e3 * v; }
inline double hz(double v) { return kTwoPi * v; }
inline double us(double v) { return 1e-6 * v; }
inline double ns(double v) { return 1e-9 * v; }
inline double ms(double v) { return 1e-3 * v; }
inline double cm(double v) { return 1e-2 * v; }
inline double mm(double v) { return 1e-3 * v; }
inline double per_cm(double v) { return 1e2 * v; }

}  // namespace units

}  // namespace slp
