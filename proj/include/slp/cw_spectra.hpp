#pragma once

#include <vector>

#include "slp/core_model.hpp"
#include "slp/errors.hpp"
#include "slp/types.hpp"

namespace slp {

struct AtomParams {
  double gamma_e = units::mhz(3.0);  ///< optical coherence decay, about half the Rb D1 natural width
  double gamma_s = 0.0;              ///< spin decoherence rate
  double d = 0.0;                    ///< resonant intensity optical depth
  double L = 0.0;                    ///< medium length

  void validate() const;
};

struct StandingWaveControl {
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double phi = 0.0;         ///< phase of the standing-wave pattern
  double delta_beta = 0.0;  ///< residual wavevector mismatch, 1/length

  void validate() const;
};

/// Amplitude attenuation per unit length of a Lambda medium at local control
/// intensity omega_sq:
///   (d / 2L) gamma_e (gamma_s - i delta) / [(gamma_e - i delta)(gamma_s - i delta) + omega_sq].
template <typename Scalar>
std::complex<Scalar> eit_attenuation(Scalar delta, Scalar omega_sq, const AtomParams& atom) {
  using C = std::complex<Scalar>;
  const C spin(Scalar(atom.gamma_s), -delta);
  const C optical(Scalar(atom.gamma_e), -delta);
  // Bare two-level absorption is the limit of 0/0 on two-photon resonance.
  if (spin == C(0) && omega_sq == Scalar(0)) return C(Scalar(atom.d / (2.0 * atom.L)));
  return Scalar(atom.d / (2.0 * atom.L)) * Scalar(atom.gamma_e) * spin / (optical * spin + omega_sq);
}

/// Fourier harmonics Lambda_n, |n| <= order, of the attenuation over one
/// grating period, with Omega^2(theta) = Omega_+^2 + Omega_-^2 + 2 Omega_+ Omega_- cos(theta).
struct GratingHarmonics {
  int order = 0;
  std::vector<Complex> values;  ///< values[n + order] = Lambda_n

  Complex operator()(int n) const {
    if (n < -order || n > order) return {0.0, 0.0};
    return values[static_cast<std::size_t>(n + order)];
  }
};

/// Periodic midpoint quadrature with step doubling until every harmonic
/// changes by less than 1e-8 relative to |Lambda_0|. Throws NumericalError if
/// the refinement cap is reached first.
GratingHarmonics grating_harmonics(double delta, const StandingWaveControl& control, const AtomParams& atom,
                                   int order = 1);

/// Lambda_n for n = 0, +1, -1.
struct LowHarmonics {
  Complex lambda0, plus1, minus1;
};
LowHarmonics low_harmonics(double delta, const StandingWaveControl& control, const AtomParams& atom);

/// Coefficients of the forward / backward mode equations
///   dE_+/dz = -a00 E_+ - a01 E_- e^{i dbeta z},   dE_-/dz = a10 E_+ e^{-i dbeta z} + a11 E_-.
struct ModeCoupling {
  Complex a00, a01, a10, a11;
};

/// Two-mode coupling from the harmonics. With order 1 it is the bare model
/// (a00 = a11 = Lambda_0, a01 = Lambda_+1, a10 = Lambda_-1). Higher orders add
/// the phase-mismatched waves at (2m+1) k, adiabatically eliminated, where k
/// is the optical wavenumber.
ModeCoupling mode_coupling(const GratingHarmonics& h, double wavenumber);

struct TransferResult {
  Complex transmitted{0.0, 0.0};  ///< E_+(L) for E_+(0) = 1, E_-(L) = 0
  Complex reflected{0.0, 0.0};    ///< E_-(0)
  double T() const { return std::norm(transmitted); }
  double R() const { return std::norm(reflected); }
};

/// Solves the two-point boundary problem through the closed-form 2x2 matrix
/// exponential. Throws NumericalError when the boundary solve is singular.
TransferResult transfer_two_mode(const ModeCoupling& m, double delta_beta, double L);

struct Spectrum {
  std::vector<double> detunings;  ///< rad/s
  std::vector<double> T;
  std::vector<double> R;
  std::vector<double> A;
};

struct SpectrumOptions {
  int harmonic_order = 1;
  double wavelength = 795e-9;  ///< signal wavelength, m; used for orders above 1
  int threads = 1;
};

Spectrum transfer_spectrum(const std::vector<double>& detunings, const StandingWaveControl& control,
                           const AtomParams& atom, const SpectrumOptions& options = {});

/// Largest |T_a - T_b| or |R_a - R_b| between two spectra on the same grid.
double max_spectrum_difference(const Spectrum& a, const Spectrum& b);

/// Full width of the contiguous region around the global maximum where the
/// curve stays at or above `fraction` of that maximum, with linear
/// interpolation of the crossings. Returns the full span if it never drops.
double peak_width(const std::vector<double>& x, const std::vector<double>& y, double fraction = 0.5);

}  // namespace slp
