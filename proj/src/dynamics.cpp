#include "slp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace slp {

namespace {

constexpr double kBalancedThreshold = 1e-9;

// (1 - e^{-x} (1 + x)) / x, the weight of the linear part of the forcing when
// integrated against e^{-x s} over one cell.
double kernel_weight(double x) {
  if (x < 1e-3) return x * (0.5 + x * (-1.0 / 3.0 + x * (1.0 / 8.0 - x / 30.0)));
  if (x > 700.0) return 1.0 / x;
  return (-std::expm1(-x) - x * std::exp(-x)) / x;
}

struct CellKernel {
  double decay;            // e^{-mu h}
  double one_minus_decay;  // 1 - e^{-mu h}
  double weight;           // kernel_weight(mu h)

  CellKernel(double mu, double h)
      : decay(std::exp(-mu * h)), one_minus_decay(-std::expm1(-mu * h)), weight(kernel_weight(mu * h)) {}

  // One exponential-integrator step from `from` (value D_from, gradient g_from)
  // to `to` (gradient g_to), the sweep direction being from -> to.
  Complex step(Complex d_from, Complex g_to, Complex g_from, double two_over_d) const {
    return decay * d_from - two_over_d * (one_minus_decay * g_to + (g_from - g_to) * weight);
  }
};

void check_alphas(Alphas a) {
  if (!(a.plus >= 0.0 && a.minus >= 0.0) || !(a.plus + a.minus > 0.0)) throw ControlsOffError();
}

DifferenceField slave_open(const ArrayXc& S, Alphas a, double d, BoundaryInputs in) {
  const Eigen::Index n = S.size();
  const double dz = 1.0 / static_cast<double>(n - 1);
  const double two_over_d = 2.0 / d;
  const double delta = a.difference();

  // Gradients at the edge positions; the boundary points reuse the adjacent face.
  ArrayXc g(n + 1);
  for (Eigen::Index e = 1; e < n; ++e) g[e] = (S[e] - S[e - 1]) / dz;
  g[0] = g[1];
  g[n] = g[n - 1];

  DifferenceField out{ArrayXc(n + 1), Boundary::Open};
  ArrayXc& D = out.edges;

  if (std::abs(delta) < kBalancedThreshold) {
    for (Eigen::Index e = 1; e < n; ++e) D[e] = -two_over_d * g[e];
    D[0] = (in.forward - S[0]) / a.minus;
    D[n] = (S[n - 1] - in.backward) / a.plus;
    return out;
  }

  const double mu = d / std::abs(delta);
  const CellKernel half(mu, 0.5 * dz);
  const CellKernel full(mu, dz);

  if (delta > 0.0) {
    D[n] = (S[n - 1] - in.backward) / a.plus;
    for (Eigen::Index e = n - 1; e >= 0; --e) {
      const CellKernel& k = (e == n - 1 || e == 0) ? half : full;
      D[e] = k.step(D[e + 1], g[e], g[e + 1], two_over_d);
    }
  } else {
    D[0] = (in.forward - S[0]) / a.minus;
    for (Eigen::Index e = 1; e <= n; ++e) {
      const CellKernel& k = (e == 1 || e == n) ? half : full;
      D[e] = k.step(D[e - 1], g[e], g[e - 1], two_over_d);
    }
  }
  return out;
}

DifferenceField slave_periodic(const ArrayXc& S, Alphas a, double d) {
  const Eigen::Index n = S.size();
  const double dz = 1.0 / static_cast<double>(n);
  const double two_over_d = 2.0 / d;
  const double delta = a.difference();

  ArrayXc g(n);
  for (Eigen::Index e = 0; e < n; ++e) g[e] = (S[e] - S[(e + n - 1) % n]) / dz;

  DifferenceField out{ArrayXc(n), Boundary::Periodic};
  ArrayXc& D = out.edges;

  if (std::abs(delta) < kBalancedThreshold) {
    D = -two_over_d * g;
    return out;
  }

  const double mu = d / std::abs(delta);
  const CellKernel k(mu, dz);
  // Particular sweep from a zero start, then add the homogeneous solution that
  // closes the ring: x = P / (1 - E^n).
  const double ring = -std::expm1(-mu * dz * static_cast<double>(n));
  if (delta > 0.0) {
    Complex next{0.0, 0.0};
    for (Eigen::Index e = n - 1; e >= 0; --e) {
      D[e] = k.step(next, g[e], g[(e + 1) % n], two_over_d);
      next = D[e];
    }
    const Complex x = D[0] / ring;
    Complex corr = x;
    for (Eigen::Index e = n - 1; e >= 0; --e) {
      corr *= k.decay;
      D[e] += corr;
    }
  } else {
    Complex prev{0.0, 0.0};
    for (Eigen::Index e = 0; e < n; ++e) {
      D[e] = k.step(prev, g[e], g[(e + n - 1) % n], two_over_d);
      prev = D[e];
    }
    const Complex x = D[n - 1] / ring;
    Complex corr = x;
    for (Eigen::Index e = 0; e < n; ++e) {
      corr *= k.decay;
      D[e] += corr;
    }
  }
  return out;
}

// dS/dtau = -dF/dz on the finite-volume layout matching DifferenceField.
ArrayXc spin_rate(const ArrayXc& S, const DifferenceField& D, Alphas a, BoundaryInputs in) {
  const Eigen::Index n = S.size();
  const double delta = a.difference();
  const double coupling = 2.0 * a.product();
  const ArrayXc& De = D.edges;
  ArrayXc rate(n);

  auto upwind = [&](Eigen::Index lo, Eigen::Index hi, Eigen::Index far, bool has_far) -> Complex {
    // lo is the upwind neighbour of the face, hi the downwind one, far the
    // node one further upwind.
    if (!has_far) return S[lo];
    return (-S[far] + 5.0 * S[lo] + 2.0 * S[hi]) / 6.0;
  };

  if (D.boundary == Boundary::Periodic) {
    const double dz = 1.0 / static_cast<double>(n);
    ArrayXc F(n);
    for (Eigen::Index e = 0; e < n; ++e) {
      const Eigen::Index left = (e + n - 1) % n;
      Complex adv{0.0, 0.0};
      if (delta > 0.0) adv = upwind(left, e, (e + n - 2) % n, true);
      if (delta < 0.0) adv = upwind(e, left, (e + 1) % n, true);
      F[e] = delta * adv + coupling * De[e];
    }
    for (Eigen::Index i = 0; i < n; ++i) rate[i] = -(F[(i + 1) % n] - F[i]) / dz;
    return rate;
  }

  const double dz = 1.0 / static_cast<double>(n - 1);
  ArrayXc F(n + 1);
  for (Eigen::Index e = 1; e < n; ++e) {
    Complex adv{0.0, 0.0};
    if (delta > 0.0) adv = upwind(e - 1, e, e - 2, e >= 2);
    if (delta < 0.0) adv = upwind(e, e - 1, e + 1, e + 1 <= n - 1);
    F[e] = delta * adv + coupling * De[e];
  }
  const Complex psi_minus_0 = S[0] - a.plus * De[0];
  const Complex psi_plus_L = S[n - 1] + a.minus * De[n];
  F[0] = a.plus * in.forward - a.minus * psi_minus_0;
  F[n] = a.plus * psi_plus_L - a.minus * in.backward;

  rate[0] = -(F[1] - F[0]) / (0.5 * dz);
  for (Eigen::Index i = 1; i < n - 1; ++i) rate[i] = -(F[i + 1] - F[i]) / dz;
  rate[n - 1] = -(F[n] - F[n - 1]) / (0.5 * dz);
  return rate;
}

}  // namespace

ArrayXc DifferenceField::at_nodes() const {
  if (boundary == Boundary::Periodic) {
    const Eigen::Index n = edges.size();
    ArrayXc out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = 0.5 * (edges[i] + edges[(i + 1) % n]);
    return out;
  }
  const Eigen::Index n = edges.size() - 1;
  ArrayXc out(n);
  out[0] = edges[0];
  out[n - 1] = edges[n];
  for (Eigen::Index i = 1; i < n - 1; ++i) out[i] = 0.5 * (edges[i] + edges[i + 1]);
  return out;
}

double grid_spacing(Eigen::Index nz, Boundary boundary) {
  return boundary == Boundary::Periodic ? 1.0 / static_cast<double>(nz) : 1.0 / static_cast<double>(nz - 1);
}

DifferenceField slave_difference_edges(const ArrayXc& S, Alphas alphas, double optical_depth,
                                       BoundaryInputs inputs, Boundary boundary) {
  check_alphas(alphas);
  if (S.size() < 3) throw DomainError("slave_difference: grid needs at least 3 nodes");
  if (!(optical_depth > 0.0)) throw DomainError("slave_difference: optical depth must be positive");
  return boundary == Boundary::Periodic ? slave_periodic(S, alphas, optical_depth)
                                        : slave_open(S, alphas, optical_depth, inputs);
}

ArrayXc slave_difference(const ArrayXc& S, Alphas alphas, double optical_depth, BoundaryInputs inputs,
                         Boundary boundary) {
  return slave_difference_edges(S, alphas, optical_depth, inputs, boundary).at_nodes();
}

double stable_step(Alphas alphas, double optical_depth, double dz) {
  const double k = 2.0 / dz;
  const double delta = alphas.difference();
  const double d = optical_depth;
  const double speed2 = (delta * delta * d * d + k * k) / (d * d + k * k * delta * delta);
  return 1.0 / (k * std::sqrt(speed2));
}

ArrayXc advance_spin(const ArrayXc& S, const DifferenceField& D, Alphas alphas, double optical_depth,
                     double dtau, BoundaryInputs inputs, Boundary boundary) {
  check_alphas(alphas);
  if (!(dtau >= 0.0)) throw StepSizeError("advance_spin: negative scaled-time step");
  if (dtau == 0.0) return S;
  const double dz = grid_spacing(S.size(), boundary);
  const double limit = stable_step(alphas, optical_depth, dz);
  if (dtau > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "advance_spin: step " << dtau << " exceeds the stability bound " << limit;
    throw StepSizeError(msg.str());
  }

  auto rate_of = [&](const ArrayXc& s) {
    return spin_rate(s, slave_difference_edges(s, alphas, optical_depth, inputs, boundary), alphas, inputs);
  };

  const ArrayXc s1 = S + dtau * spin_rate(S, D, alphas, inputs);
  const ArrayXc s2 = 0.75 * S + 0.25 * (s1 + dtau * rate_of(s1));
  return (1.0 / 3.0) * S + (2.0 / 3.0) * (s2 + dtau * rate_of(s2));
}

ArrayXc apply_decoherence(const ArrayXc& S, double gamma_s, double dt) {
  if (gamma_s == 0.0) return S;
  return S * std::exp(-gamma_s * dt);
}

PolaritonState compose_state(const ArrayXc& S, const ArrayXc& D, Alphas alphas, double t, double tau) {
  PolaritonState st;
  st.S = S;
  st.D = D;
  st.psi_plus = S + alphas.minus * D;
  st.psi_minus = S - alphas.plus * D;
  st.t = t;
  st.tau = tau;
  return st;
}

}  // namespace slp
