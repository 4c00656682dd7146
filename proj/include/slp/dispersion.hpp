#pragma once

#include <complex>
#include <vector>

#include "slp/core_model.hpp"
#include "slp/errors.hpp"
#include "slp/types.hpp"

namespace slp {

// Envelopes are expanded as exp(i k z + i omega tau) with tau the scaled time.
// In this convention Im omega > 0 is decay and a single forward beam gives
// omega = -c k, i.e. motion toward +z. Only |v|, the decay rate and the
// diffusion coefficient are convention independent, so directions are
// reported separately.

/// omega(k) = -c k (xi Delta - i k) / (xi - i k Delta),  Delta = alpha_+ - alpha_-.
///
/// Throws DomainError at the pole k = -i xi / Delta (reachable only for complex k).
template <typename Scalar>
std::complex<Scalar> omega_of_k(std::complex<Scalar> k, Scalar alpha_plus, Scalar alpha_minus, Scalar xi,
                                Scalar c = Scalar(1)) {
  using C = std::complex<Scalar>;
  const Scalar delta = alpha_plus - alpha_minus;
  const C i(Scalar(0), Scalar(1));
  const C den = C(xi) - i * k * delta;
  if (std::abs(den) <= Scalar(1e-14) * (std::abs(xi) + std::abs(k * delta))) {
    throw DomainError("omega_of_k: k sits on the pole xi = i k (alpha_+ - alpha_-)");
  }
  return -c * k * (xi * delta - i * k) / den;
}

template <typename Scalar>
std::complex<Scalar> omega_of_k(Scalar k, Scalar alpha_plus, Scalar alpha_minus, Scalar xi, Scalar c = Scalar(1)) {
  return omega_of_k(std::complex<Scalar>(k, Scalar(0)), alpha_plus, alpha_minus, xi, c);
}

struct DispersionPoint {
  double k = 0.0;
  Complex omega{0.0, 0.0};
  double alpha_plus = 0.0;
  double alpha_minus = 0.0;
  double xi = 0.0;
};

std::vector<DispersionPoint> dispersion_curve(const std::vector<double>& ks, double alpha_plus, double alpha_minus,
                                              double xi, double c = 1.0);

/// Leading small-k behaviour: omega = -c Delta k + i D k^2 + O(k^3).
struct SmallK {
  double speed = 0.0;      ///< |advection speed| = c |alpha_+ - alpha_-|
  double diffusion = 0.0;  ///< 4 c alpha_+ alpha_- / xi
  int direction = 0;       ///< +1 toward +z, -1 toward -z, 0 stationary
};

SmallK small_k_expansion(double alpha_plus, double alpha_minus, double xi, double c = 1.0);

/// delta l / l ~ c tau / (xi l^2). An order-of-magnitude estimate only.
double spreading_estimate(double l, double tau, double xi, double c = 1.0);

struct PlaneWaveResult {
  Complex measured_rate{0.0, 0.0};  ///< lambda in S ~ exp(lambda tau)
  Complex measured_omega{0.0, 0.0};  ///< -i lambda
  Complex predicted_omega{0.0, 0.0};
  double measured_phase_speed = 0.0;  ///< |Re omega| / |k|
  double measured_decay = 0.0;        ///< Im omega
  int steps = 0;
};

/// Evolves S = exp(i k z) with the dynamics solver on a periodic grid of
/// grid.nz nodes spanning params.L and fits the complex rate of the mode.
/// k must be a multiple of 2 pi / L (DomainError otherwise). grid.dt, if
/// positive, is used as the scaled-time step.
PlaneWaveResult plane_wave_check(double k, double alpha_plus, double alpha_minus, const MediumParams& params,
                                 const Grid& grid);

}  // namespace slp
