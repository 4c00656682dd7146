#include "slp/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slp/dynamics.hpp"

namespace slp {

std::vector<DispersionPoint> dispersion_curve(const std::vector<double>& ks, double alpha_plus, double alpha_minus,
                                              double xi, double c) {
  std::vector<DispersionPoint> out;
  out.reserve(ks.size());
  for (double k : ks) out.push_back({k, omega_of_k(k, alpha_plus, alpha_minus, xi, c), alpha_plus, alpha_minus, xi});
  return out;
}

SmallK small_k_expansion(double alpha_plus, double alpha_minus, double xi, double c) {
  if (!(xi > 0.0)) throw DomainError("small_k_expansion: xi must be positive");
  const double delta = alpha_plus - alpha_minus;
  SmallK out;
  out.speed = c * std::abs(delta);
  out.diffusion = 4.0 * c * alpha_plus * alpha_minus / xi;
  out.direction = delta > 0.0 ? 1 : (delta < 0.0 ? -1 : 0);
  return out;
}

double spreading_estimate(double l, double tau, double xi, double c) {
  if (!(l > 0.0)) throw DomainError("spreading_estimate: pulse length must be positive");
  return c * tau / (xi * l * l);
}

PlaneWaveResult plane_wave_check(double k, double alpha_plus, double alpha_minus, const MediumParams& params,
                                 const Grid& grid) {
  params.validate();
  grid.validate();
  const Alphas a{alpha_plus, alpha_minus};
  const double L = params.L;
  const double cycles = k * L / kTwoPi;
  if (std::abs(cycles - std::round(cycles)) > 1e-9 * std::max(1.0, std::abs(cycles))) {
    std::ostringstream msg;
    msg << "plane_wave_check: k = " << k << " is not a multiple of 2 pi / L on the periodic grid";
    throw DomainError(msg.str());
  }

  PlaneWaveResult out;
  out.predicted_omega = omega_of_k(k, alpha_plus, alpha_minus, params.xi, params.c);
  if (std::round(cycles) == 0.0) return out;

  const Eigen::Index n = grid.nz;
  const double d = params.optical_depth();
  const double dz = grid_spacing(n, Boundary::Periodic);
  const double kt = kTwoPi * std::round(cycles);  // wavenumber on the unit grid
  ArrayXc mode(n);
  for (Eigen::Index j = 0; j < n; ++j) mode[j] = std::polar(1.0, kt * static_cast<double>(j) * dz);

  // Scaled-time step: inside the stability bound and fine enough that the
  // Runge-Kutta error is far below the fit tolerance.
  const double rate_scale = std::abs(omega_of_k(kt, alpha_plus, alpha_minus, d));
  double h = 0.5 * stable_step(a, d, dz);
  if (grid.dt > 0.0) h = grid.dt;
  else h = std::min(h, 0.02 / rate_scale);
  const double total = 2.0 / rate_scale;
  const int steps = std::max(8, static_cast<int>(std::ceil(total / h)));
  h = total / steps;

  std::vector<double> taus{0.0};
  std::vector<double> log_mag{0.0};
  std::vector<double> phase{0.0};
  ArrayXc S = mode;
  for (int s = 1; s <= steps; ++s) {
    const auto D = slave_difference_edges(S, a, d, {}, Boundary::Periodic);
    S = advance_spin(S, D, a, d, h, {}, Boundary::Periodic);
    const Complex p = (mode.conjugate() * S).sum() / static_cast<double>(n);
    double arg = std::arg(p);
    while (arg - phase.back() > kPi) arg -= kTwoPi;
    while (arg - phase.back() < -kPi) arg += kTwoPi;
    taus.push_back(s * h);
    log_mag.push_back(std::log(std::abs(p)));
    phase.push_back(arg);
  }

  // Ordinary least-squares slope against tau.
  const auto slope = [&](const std::vector<double>& y) {
    const double m = static_cast<double>(taus.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
      sx += taus[i];
      sy += y[i];
      sxx += taus[i] * taus[i];
      sxy += taus[i] * y[i];
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  // Back to physical units: tau_unit = c tau / L.
  const double scale = params.c / L;
  out.measured_rate = Complex(slope(log_mag), slope(phase)) * scale;
  out.measured_omega = Complex(0.0, -1.0) * out.measured_rate;
  out.measured_phase_speed = std::abs(out.measured_omega.real()) / std::abs(k);
  out.measured_decay = out.measured_omega.imag();
  out.steps = steps;
  return out;
}

}  // namespace slp
