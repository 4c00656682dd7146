#include "slp/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace slp {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

double lerp(double a, double b, double t0, double t1, double t) {
  if (t1 <= t0) return b;
  return a + (b - a) * (t - t0) / (t1 - t0);
}

// Integral of a linear function squared over an interval of width h.
double square_integral(double a, double b, double h) { return h * (a * a + a * b + b * b) / 3.0; }

}  // namespace

void MediumParams::validate() const {
  require(std::isfinite(xi) && xi > 0.0, "medium.xi must be positive");
  require(std::isfinite(g2N) && g2N > 0.0, "medium.g2N must be positive");
  require(std::isfinite(c) && c > 0.0, "medium.c must be positive");
  require(std::isfinite(L) && L > 0.0, "medium.L must be positive");
  require(std::isfinite(gamma_s) && gamma_s >= 0.0, "medium.gamma_s must be non-negative");
  require(std::isfinite(optical_depth()), "medium optical depth xi*L must be finite");
}

void SignalInput::validate() const {
  require(std::isfinite(sigma_t) && sigma_t > 0.0, "input.sigma_t must be positive");
  require(std::isfinite(t0), "input.t0 must be finite");
  require(std::isfinite(std::abs(amplitude)), "input.amplitude must be finite");
}

void Grid::validate() const {
  require(nz >= 16, "grid.Nz must be at least 16");
  require(std::isfinite(dt) && dt >= 0.0, "grid.dt must be non-negative (0 selects automatically)");
}

ControlSchedule::ControlSchedule(std::vector<ControlSegment> segments, double ramp_time)
    : segments_(std::move(segments)), ramp_time_(ramp_time) {
  require(!segments_.empty(), "schedule needs at least one segment");
  require(std::isfinite(ramp_time_) && ramp_time_ >= 0.0, "schedule.ramp_time must be non-negative");
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const auto& s = segments_[k];
    std::ostringstream where;
    where << "schedule segment " << k << " ('" << s.label << "')";
    require(std::isfinite(s.t_start) && std::isfinite(s.t_end) && s.t_end > s.t_start,
            where.str() + " must have positive duration");
    require(s.omega_plus >= 0.0 && s.omega_minus >= 0.0,
            where.str() + " Rabi frequencies must be non-negative");
    if (k > 0) {
      require(s.t_start == segments_[k - 1].t_end, where.str() + " is not contiguous with its predecessor");
      require(ramp_time_ <= s.t_end - s.t_start, where.str() + " is shorter than the ramp time");
    }
  }

  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const auto& s = segments_[k];
    double plateau_start = s.t_start;
    if (k > 0 && ramp_time_ > 0.0) {
      const auto& prev = segments_[k - 1];
      plateau_start = s.t_start + ramp_time_;
      pieces_.push_back({s.t_start, plateau_start, prev.omega_plus, s.omega_plus, prev.omega_minus,
                         s.omega_minus});
    }
    if (plateau_start < s.t_end) {
      pieces_.push_back({plateau_start, s.t_end, s.omega_plus, s.omega_plus, s.omega_minus, s.omega_minus});
    }
  }
}

ControlSchedule ControlSchedule::from_stages(const std::vector<Stage>& stages, double ramp_time,
                                             double t_start) {
  std::vector<ControlSegment> segments;
  double t = t_start;
  for (const auto& st : stages) {
    segments.push_back({st.label, t, t + st.duration, st.omega_plus, st.omega_minus});
    t += st.duration;
  }
  return ControlSchedule(std::move(segments), ramp_time);
}

std::size_t ControlSchedule::piece_at(double t) const {
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double v, const Piece& p) { return v < p.t0; });
  if (it == pieces_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(pieces_.begin(), it) - 1);
}

std::size_t ControlSchedule::segment_at(double t) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const ControlSegment& s) { return v < s.t_start; });
  if (it == segments_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(segments_.begin(), it) - 1);
}

double ControlSchedule::omega_plus(double t) const {
  const auto& p = pieces_[piece_at(t)];
  return lerp(p.plus0, p.plus1, p.t0, p.t1, std::clamp(t, p.t0, p.t1));
}

double ControlSchedule::omega_minus(double t) const {
  const auto& p = pieces_[piece_at(t)];
  return lerp(p.minus0, p.minus1, p.t0, p.t1, std::clamp(t, p.t0, p.t1));
}

std::pair<double, double> ControlSchedule::omegas_from(double t, double reference) const {
  const auto& p = pieces_[piece_at(reference)];
  const double tc = std::clamp(t, p.t0, p.t1);
  return {lerp(p.plus0, p.plus1, p.t0, p.t1, tc), lerp(p.minus0, p.minus1, p.t0, p.t1, tc)};
}

std::pair<double, double> ControlSchedule::intensity_integrals(double t0, double t1) const {
  double plus = 0.0;
  double minus = 0.0;
  for (const auto& p : pieces_) {
    const double a = std::max(t0, p.t0);
    const double b = std::min(t1, p.t1);
    if (b <= a) continue;
    const double h = b - a;
    plus += square_integral(lerp(p.plus0, p.plus1, p.t0, p.t1, a), lerp(p.plus0, p.plus1, p.t0, p.t1, b), h);
    minus += square_integral(lerp(p.minus0, p.minus1, p.t0, p.t1, a),
                             lerp(p.minus0, p.minus1, p.t0, p.t1, b), h);
  }
  return {plus, minus};
}

std::vector<double> ControlSchedule::breakpoints() const {
  std::vector<double> out;
  for (const auto& p : pieces_) out.push_back(p.t0);
  out.push_back(pieces_.back().t1);
  return out;
}

StageKind classify(const ControlSegment& segment) {
  const double p = segment.omega_plus;
  const double m = segment.omega_minus;
  if (p == 0.0 && m == 0.0) return StageKind::Frozen;
  if (m == 0.0) return StageKind::Forward;
  if (p == 0.0) return StageKind::Backward;
  if (p == m) return StageKind::Hold;
  return StageKind::Mixed;
}

const char* to_string(StageKind kind) {
  switch (kind) {
    case StageKind::Frozen: return "frozen";
    case StageKind::Forward: return "forward";
    case StageKind::Backward: return "backward";
    case StageKind::Hold: return "hold";
    case StageKind::Mixed: return "mixed";
  }
  return "unknown";
}

double scaled_time(double t, const ControlSchedule& schedule, double g2N) {
  if (t < schedule.start()) throw DomainError("scaled_time: t precedes the schedule start");
  if (t > schedule.end()) throw DomainError("scaled_time: t is past the schedule end");
  const auto [plus, minus] = schedule.intensity_integrals(schedule.start(), t);
  return (plus + minus) / g2N;
}

std::pair<ArrayXc, ArrayXc> polariton_to_fields(const ArrayXc& psi_plus, const ArrayXc& psi_minus,
                                                double omega_plus, double omega_minus, double g2N) {
  const double scale = 1.0 / std::sqrt(g2N);
  ArrayXc e_plus = (omega_plus * scale) * psi_plus;
  ArrayXc e_minus = (omega_minus * scale) * psi_minus;
  if (omega_plus == 0.0) e_plus.setZero();
  if (omega_minus == 0.0) e_minus.setZero();
  return {std::move(e_plus), std::move(e_minus)};
}

std::pair<ArrayXc, ArrayXc> fields_to_polariton(const ArrayXc& e_plus, const ArrayXc& e_minus,
                                                double omega_plus, double omega_minus, double g2N) {
  const double root = std::sqrt(g2N);
  ArrayXc psi_plus = ArrayXc::Zero(e_plus.size());
  ArrayXc psi_minus = ArrayXc::Zero(e_minus.size());
  if (omega_plus != 0.0) psi_plus = (root / omega_plus) * e_plus;
  if (omega_minus != 0.0) psi_minus = (root / omega_minus) * e_minus;
  return {std::move(psi_plus), std::move(psi_minus)};
}

}  // namespace slp
