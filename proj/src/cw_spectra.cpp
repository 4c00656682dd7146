#include "slp/cw_spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <exception>
#include <thread>

namespace slp {

namespace {

constexpr int kMinPoints = 16;
constexpr int kMaxPoints = 1 << 22;
constexpr double kQuadratureTol = 1e-8;

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

// (1/pi) * sum over the midpoint nodes of [0, pi] of f(theta) cos(n theta) / M,
// which equals the periodic rule on 2M points for an even integrand.
std::vector<Complex> midpoint_harmonics(double delta, const StandingWaveControl& w, const AtomParams& atom,
                                        int order, int points) {
  std::vector<Complex> out(static_cast<std::size_t>(order + 1), Complex{0.0, 0.0});
  const double base = w.omega_plus * w.omega_plus + w.omega_minus * w.omega_minus;
  const double cross = 2.0 * w.omega_plus * w.omega_minus;
  const double h = kPi / points;
  for (int j = 0; j < points; ++j) {
    const double theta = (j + 0.5) * h;
    const double omega_sq = std::max(base + cross * std::cos(theta), 0.0);
    const Complex f = eit_attenuation(delta, omega_sq, atom);
    for (int n = 0; n <= order; ++n) out[static_cast<std::size_t>(n)] += f * std::cos(n * theta);
  }
  for (auto& v : out) v /= static_cast<double>(points);
  return out;
}

}  // namespace

void AtomParams::validate() const {
  require(std::isfinite(gamma_e) && gamma_e > 0.0, "atom.gamma_e must be positive");
  require(std::isfinite(gamma_s) && gamma_s >= 0.0, "atom.gamma_s must be non-negative");
  require(std::isfinite(d) && d > 0.0, "atom.d must be positive");
  require(std::isfinite(L) && L > 0.0, "atom.L must be positive");
}

void StandingWaveControl::validate() const {
  require(std::isfinite(omega_plus) && omega_plus >= 0.0, "control.omega_plus must be non-negative");
  require(std::isfinite(omega_minus) && omega_minus >= 0.0, "control.omega_minus must be non-negative");
  require(std::isfinite(phi), "control.phi must be finite");
  require(std::isfinite(delta_beta), "control.delta_beta must be finite");
}

GratingHarmonics grating_harmonics(double delta, const StandingWaveControl& control, const AtomParams& atom,
                                   int order) {
  if (order < 0) throw ValidationError("harmonic order must be non-negative");
  int points = kMinPoints;
  std::vector<Complex> prev = midpoint_harmonics(delta, control, atom, order, points);
  for (;;) {
    points *= 2;
    if (points > kMaxPoints) {
      std::ostringstream msg;
      msg << "grating harmonics did not converge at detuning " << delta << " rad/s";
      throw NumericalError(msg.str());
    }
    const std::vector<Complex> next = midpoint_harmonics(delta, control, atom, order, points);
    const double scale = std::abs(next[0]);
    double change = 0.0;
    for (std::size_t n = 0; n < next.size(); ++n) change = std::max(change, std::abs(next[n] - prev[n]));
    prev = next;
    if (change <= kQuadratureTol * scale) break;
  }

  GratingHarmonics out;
  out.order = order;
  out.values.resize(static_cast<std::size_t>(2 * order + 1));
  for (int n = -order; n <= order; ++n) {
    // The integrand is even in theta, so Lambda_n and Lambda_-n differ only
    // through the pattern phase.
    out.values[static_cast<std::size_t>(n + order)] = std::polar(1.0, n * control.phi) * prev[std::abs(n)];
  }
  return out;
}

LowHarmonics low_harmonics(double delta, const StandingWaveControl& control, const AtomParams& atom) {
  const auto h = grating_harmonics(delta, control, atom, 1);
  return {h(0), h(1), h(-1)};
}

ModeCoupling mode_coupling(const GratingHarmonics& h, double wavenumber) {
  ModeCoupling m{h(0), h(1), h(-1), h(0)};
  if (h.order <= 1) return m;
  const int n = h.order;
  // Wave m (carrier (2m+1)k) is slaved: a_m = c_m (Lambda_m a_0 + Lambda_{m+1} a_{-1}).
  for (int j = -n - 1; j <= n; ++j) {
    if (j == 0 || j == -1) continue;
    const Complex c_j(0.0, 1.0 / (2.0 * wavenumber * j * (j + 1.0)));
    m.a00 += h(-j) * c_j * h(j);
    m.a01 += h(-j) * c_j * h(j + 1);
    m.a10 += h(-1 - j) * c_j * h(j);
    m.a11 += h(-1 - j) * c_j * h(j + 1);
  }
  return m;
}

TransferResult transfer_two_mode(const ModeCoupling& c, double delta_beta, double L) {
  const Complex i(0.0, 1.0);
  const Complex m00 = -c.a00;
  const Complex m01 = -c.a01;
  const Complex m10 = c.a10;
  const Complex m11 = c.a11 + i * delta_beta;
  const Complex mean = 0.5 * (m00 + m11);
  const Complex p = 0.5 * (m00 - m11);
  Complex q = std::sqrt(p * p + m01 * m10);
  if (q.real() < 0.0) q = -q;

  // exp(M L) = e^{mean L} [cosh(qL) I + sinh(qL)/q N], N = [[p, m01], [m10, -p]].
  // Both boundary quantities are ratios, so a common factor e^{qL} cancels.
  Complex ch, sh_over_q, front;
  const Complex qL = q * L;
  if (std::abs(qL) < 1e-6) {
    ch = std::cosh(qL);
    sh_over_q = L * (1.0 + qL * qL / 6.0);
    front = std::exp(mean * L);
  } else {
    const Complex e = std::exp(-2.0 * qL);
    ch = 0.5 * (1.0 + e);
    sh_over_q = 0.5 * (1.0 - e) / q;
    front = std::exp((mean - q) * L);
  }
  const Complex t22 = ch - sh_over_q * p;
  if (std::abs(t22) <= 1e-14 * (std::abs(ch) + std::abs(sh_over_q * p))) {
    throw NumericalError("singular boundary solve in the transfer matrix");
  }
  TransferResult out;
  out.reflected = -sh_over_q * m10 / t22;
  out.transmitted = front / t22;
  return out;
}

Spectrum transfer_spectrum(const std::vector<double>& detunings, const StandingWaveControl& control,
                           const AtomParams& atom, const SpectrumOptions& options) {
  atom.validate();
  control.validate();
  if (options.harmonic_order < 1) throw ValidationError("spectrum.harmonic_order must be at least 1");
  if (!(options.wavelength > 0.0)) throw ValidationError("spectrum.wavelength must be positive");
  const std::size_t n = detunings.size();
  Spectrum out;
  out.detunings = detunings;
  out.T.assign(n, 0.0);
  out.R.assign(n, 0.0);
  out.A.assign(n, 0.0);
  const double wavenumber = kTwoPi / options.wavelength;

  auto solve = [&](std::size_t k) {
    const double delta = detunings[k];
    const auto h = grating_harmonics(delta, control, atom, options.harmonic_order);
    try {
      const auto res = transfer_two_mode(mode_coupling(h, wavenumber), control.delta_beta, atom.L);
      out.T[k] = res.T();
      out.R[k] = res.R();
      out.A[k] = 1.0 - out.T[k] - out.R[k];
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << e.what() << " at detuning " << delta / kTwoPi << " Hz";
      throw NumericalError(msg.str());
    }
  };

  const int threads = std::clamp(options.threads, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) solve(k);
    return out;
  }
  // Strided partition: each worker writes its own slots, so the result does
  // not depend on scheduling.
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = static_cast<std::size_t>(w); k < n; k += static_cast<std::size_t>(threads)) solve(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double max_spectrum_difference(const Spectrum& a, const Spectrum& b) {
  if (a.T.size() != b.T.size()) throw ValidationError("spectra are on different detuning grids");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.T.size(); ++k) {
    worst = std::max(worst, std::abs(a.T[k] - b.T[k]));
    worst = std::max(worst, std::abs(a.R[k] - b.R[k]));
  }
  return worst;
}

double peak_width(const std::vector<double>& x, const std::vector<double>& y, double fraction) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("peak_width needs matching arrays of length >= 2");
  const auto top = static_cast<std::size_t>(std::distance(y.begin(), std::max_element(y.begin(), y.end())));
  const double level = fraction * y[top];
  const auto cross = [&](std::size_t inside, std::size_t outside) {
    const double t = (y[inside] - level) / (y[inside] - y[outside]);
    return x[inside] + t * (x[outside] - x[inside]);
  };
  std::size_t lo = top;
  while (lo > 0 && y[lo - 1] >= level) --lo;
  std::size_t hi = top;
  while (hi + 1 < y.size() && y[hi + 1] >= level) ++hi;
  const double left = lo == 0 ? x.front() : cross(lo, lo - 1);
  const double right = hi + 1 == y.size() ? x.back() : cross(hi, hi + 1);
  return right - left;
}

}  // namespace slp
