#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slp/dispersion.hpp"
#include "slp/dynamics.hpp"

using namespace slp;

namespace {

ArrayXr nodes(int n) { return ArrayXr::LinSpaced(n, 0.0, 1.0); }

ArrayXc gaussian(const ArrayXr& z, double z0, double s) {
  return ((-(z - z0).square() / (2.0 * s * s)).exp()).cast<Complex>();
}

double edge_position(Eigen::Index e, Eigen::Index n) {
  if (e == 0) return 0.0;
  if (e == n) return 1.0;
  return (static_cast<double>(e) - 0.5) / static_cast<double>(n - 1);
}

double relative_l2(const ArrayXc& a, const ArrayXc& b) {
  return std::sqrt((a - b).abs2().sum() / b.abs2().sum());
}

// Evolves S for a scaled time `tau` at fixed alphas, taking near-maximal steps.
ArrayXc evolve(ArrayXc S, Alphas a, double d, double tau, Boundary b = Boundary::Open, double safety = 0.9) {
  const double dz = grid_spacing(S.size(), b);
  const int steps = static_cast<int>(std::ceil(tau / (safety * stable_step(a, d, dz))));
  const double h = tau / steps;
  for (int k = 0; k < steps; ++k) {
    const auto D = slave_difference_edges(S, a, d, {}, b);
    S = advance_spin(S, D, a, d, h, {}, b);
  }
  return S;
}

}  // namespace

TEST_CASE("slaved difference mode matches a fine RK4 integration") {
  const int n = 8001;
  const double z0 = 0.5, s = 0.1, d = 50.0;
  const ArrayXr z = nodes(n);
  const ArrayXc S = gaussian(z, z0, s);
  auto S_of = [&](double x) { return std::exp(-(x - z0) * (x - z0) / (2 * s * s)); };
  std::function<double(double)> dS = [&](double x) { return -(x - z0) / (s * s) * S_of(x); };

  for (Alphas a : {Alphas{1.0, 0.0}, Alphas{0.8, 0.2}, Alphas{0.25, 0.75}}) {
    CAPTURE(a.plus);
    const auto D = slave_difference_edges(S, a, d);
    // Far boundary condition with no incoming field.
    const double far = a.plus > a.minus ? S_of(1.0) / a.plus : -S_of(0.0) / a.minus;
    double err = 0.0, scale = 0.0;
    for (Eigen::Index e = 0; e <= n; e += 100) {
      const double x = edge_position(e, n);
      const double ref = oracle::rk4_difference(x, a.plus, a.minus, d, dS, far, 20000);
      err = std::max(err, std::abs(D.edges[e].real() - ref));
      scale = std::max(scale, std::abs(ref));
    }
    CHECK(err / scale < 1e-6);
  }
}

TEST_CASE("balanced closure is the limit of the relaxation solution from either side") {
  const int n = 4001;
  const double z0 = 0.5, s = 0.08, d = 40.0;
  const ArrayXr z = nodes(n);
  const ArrayXc S = gaussian(z, z0, s);
  std::function<double(double)> dS = [&](double x) {
    return -(x - z0) / (s * s) * std::exp(-(x - z0) * (x - z0) / (2 * s * s));
  };
  const auto D = slave_difference_edges(S, Alphas{0.5, 0.5}, d);
  for (double eps : {1e-6, -1e-6}) {
    double err = 0.0, scale = 0.0;
    for (Eigen::Index e = 1; e < n; e += 40) {
      const double ref = oracle::relaxation_difference(edge_position(e, n), eps, d, dS);
      err = std::max(err, std::abs(D.edges[e].real() - ref));
      scale = std::max(scale, std::abs(ref));
    }
    CHECK(err / scale < 1e-5);
  }
}

TEST_CASE("uniform spin wave has no difference mode") {
  const int n = 301;
  const ArrayXc S = ArrayXc::Constant(n, Complex(0.7, -0.2));
  for (Alphas a : {Alphas{1.0, 0.0}, Alphas{0.6, 0.4}, Alphas{0.5, 0.5}, Alphas{0.0, 1.0}}) {
    CHECK(slave_difference(S, a, 30.0, {}, Boundary::Periodic).abs().maxCoeff() < 1e-13);
  }
  // With consistent inputs the open grid gives zero too.
  const auto D = slave_difference(S, Alphas{0.7, 0.3}, 30.0, {S[0], S[0]});
  CHECK(D.abs().maxCoeff() < 1e-13);
}

TEST_CASE("state composition reproduces S and D") {
  const ArrayXr z = nodes(101);
  const ArrayXc S = gaussian(z, 0.4, 0.1);
  const Alphas a{0.7, 0.3};
  const ArrayXc D = slave_difference(S, a, 20.0);
  const auto st = compose_state(S, D, a, 0.0, 0.0);
  CHECK((a.plus * st.psi_plus + a.minus * st.psi_minus - S).abs().maxCoeff() < 1e-14);
  CHECK((st.psi_plus - st.psi_minus - D).abs().maxCoeff() < 1e-14);
}

TEST_CASE("stability bound limits") {
  const double dz = 1e-3;
  CHECK(stable_step({1.0, 0.0}, 100.0, dz) == doctest::Approx(dz / 2).epsilon(1e-12));
  CHECK(stable_step({0.5, 0.5}, 100.0, dz) == doctest::Approx(100.0 * dz * dz / 4).epsilon(1e-12));
  const double mid = stable_step({0.6, 0.4}, 100.0, dz);
  CHECK(mid > 0.0);
  CHECK(mid < dz / 2 / 0.2 + 1e-12);
}

TEST_CASE("advance_spin rejects an unstable step and is the identity for a zero step") {
  const ArrayXr z = nodes(201);
  const ArrayXc S = gaussian(z, 0.5, 0.1);
  const Alphas a{1.0, 0.0};
  const auto D = slave_difference_edges(S, a, 10.0);
  const double limit = stable_step(a, 10.0, grid_spacing(201, Boundary::Open));
  CHECK_THROWS_AS(advance_spin(S, D, a, 10.0, 1.01 * limit), StepSizeError);
  CHECK((advance_spin(S, D, a, 10.0, 0.0) - S).abs().maxCoeff() == 0.0);
}

TEST_CASE("pure advection translates the pulse with third-order accuracy") {
  const double tau = 0.3, s = 0.05;
  std::vector<double> errs;
  for (int n : {251, 501, 1001}) {
    const ArrayXr z = nodes(n);
    const ArrayXc S = evolve(gaussian(z, 0.3, s), {1.0, 0.0}, 50.0, tau, Boundary::Open, 0.5);
    errs.push_back(relative_l2(S, gaussian(z, 0.3 + tau, s)));
  }
  CHECK(errs.back() < 1e-3);
  const double order = std::log2(errs[1] / errs[2]);
  CHECK(order > 2.5);
}

TEST_CASE("backward advection mirrors forward advection") {
  const int n = 401;
  const ArrayXr z = nodes(n);
  const ArrayXc fwd = evolve(gaussian(z, 0.3, 0.05), {1.0, 0.0}, 20.0, 0.25);
  const ArrayXc bwd = evolve(gaussian(z, 0.7, 0.05), {0.0, 1.0}, 20.0, 0.25);
  CHECK((fwd - bwd.reverse()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("balanced controls diffuse with the heat kernel") {
  const int n = 1001;
  const double d = 100.0, tau = 0.1, s = 0.05;
  const ArrayXr z = nodes(n);
  const ArrayXc S = evolve(gaussian(z, 0.5, s), {0.5, 0.5}, d, tau);
  ArrayXc ref(n);
  for (int i = 0; i < n; ++i) ref[i] = oracle::heat_kernel_gaussian(z[i], 0.5, s, 1.0 / d, tau);
  CHECK(relative_l2(S, ref) < 1e-3);
}

TEST_CASE("amplitude variance grows at the effective diffusion rate") {
  const int n = 1201;
  const double d = 60.0, tau = 0.05, s = 0.04;
  const ArrayXr z = nodes(n);
  for (Alphas a : {Alphas{0.5, 0.5}, Alphas{2.0 / 3.0, 1.0 / 3.0}}) {
    CAPTURE(a.plus);
    const ArrayXc S0 = gaussian(z, 0.4, s);
    const ArrayXc S1 = evolve(S0, a, d, tau);
    const auto m0 = amplitude_moments(z, S0);
    const auto m1 = amplitude_moments(z, S1);
    const double D_eff = (m1.width * m1.width - m0.width * m0.width) / (2.0 * tau);
    const auto sk = small_k_expansion(a.plus, a.minus, d);
    CHECK(D_eff == doctest::Approx(sk.diffusion).epsilon(0.02));
    CHECK((m1.centroid - m0.centroid) / tau == doctest::Approx(a.difference()).epsilon(0.01).scale(1.0));
  }
}

TEST_CASE("single control conserves the spin norm inside the medium") {
  const int n = 801;
  const ArrayXr z = nodes(n);
  const ArrayXc S0 = gaussian(z, 0.3, 0.05);
  const ArrayXc S1 = evolve(S0, {1.0, 0.0}, 100.0, 0.3);
  const double dz = grid_spacing(n, Boundary::Open);
  CHECK(spin_norm(S1, dz) == doctest::Approx(spin_norm(S0, dz)).epsilon(1e-3));
}

TEST_CASE("balanced hold never increases the spin norm") {
  const int n = 401;
  const ArrayXr z = nodes(n);
  ArrayXc S = gaussian(z, 0.5, 0.05);
  const double dz = grid_spacing(n, Boundary::Open);
  double prev = spin_norm(S, dz);
  for (int k = 0; k < 20; ++k) {
    S = evolve(S, {0.5, 0.5}, 30.0, 0.01);
    const double now = spin_norm(S, dz);
    REQUIRE(now <= prev * (1.0 + 1e-12));
    prev = now;
  }
}

TEST_CASE("decoherence is exponential in real time") {
  const ArrayXc S = ArrayXc::Constant(5, Complex(1.0, 1.0));
  const ArrayXc out = apply_decoherence(S, 2.0, 0.5);
  CHECK(std::abs(out[2] - S[2] * std::exp(-1.0)) < 1e-15);
  CHECK((apply_decoherence(S, 0.0, 10.0) - S).abs().maxCoeff() == 0.0);
}

TEST_CASE("moments of a symmetric pulse sit at its centre") {
  const ArrayXr z = ArrayXr::LinSpaced(501, 0.0, 6.0);
  const ArrayXc S = ((-(z - 3.0).square() / 0.5).exp()).cast<Complex>();
  CHECK(intensity_moments(z, S).centroid == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(amplitude_moments(z, S).width == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(spin_norm(S, 6.0 / 500) == doctest::Approx(std::sqrt(kPi / 2.0) * std::sqrt(0.5)).epsilon(1e-8));
}

// ---------------------------------------------------------------------------
// Protocols

namespace {

MediumParams dimless_medium(double xi, double L) { return {xi, 1e4, 1e4, L, 0.0}; }

}  // namespace

TEST_CASE("zero input gives an identically zero trajectory") {
  const auto schedule = ControlSchedule::from_stages({{"w", 2.0, 1.0, 0.0}, {"r", 2.0, 1.0, 1.0}}, 0.0);
  SignalInput in{{0.0, 0.0}, 1.0, 0.2, Port::Forward};
  const auto traj = run_protocol(dimless_medium(10.0, 2.0), schedule, in, {201, 0.0});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    REQUIRE(traj.flux_forward[k] == 0.0);
    REQUIRE(traj.flux_backward[k] == 0.0);
    REQUIRE(traj.spin_norm[k] == 0.0);
  }
}

TEST_CASE("fixed step above the stability bound is rejected") {
  const auto schedule = ControlSchedule::from_stages({{"w", 2.0, 1.0, 0.0}}, 0.0);
  SignalInput in{{1.0, 0.0}, 1.0, 0.2, Port::Forward};
  CHECK_THROWS_AS(run_protocol(dimless_medium(10.0, 2.0), schedule, in, {401, 0.05}), StepSizeError);
}

TEST_CASE("coarse grids and truncated inputs produce warnings") {
  const auto schedule = ControlSchedule::from_stages({{"w", 2.0, 1.0, 0.0}}, 0.0);
  SignalInput in{{1.0, 0.0}, 0.1, 0.2, Port::Forward};
  const auto traj = run_protocol(dimless_medium(100.0, 2.0), schedule, in, {21, 0.0});
  CHECK(traj.warnings.size() == 2);
}

TEST_CASE("store and release in either direction returns the stored energy") {
  SignalInput in{{1.0, 0.0}, 1.5, 0.5, Port::Forward};
  const MediumParams m = dimless_medium(10.0, 6.0);
  for (bool backward : {false, true}) {
    CAPTURE(backward);
    const double op = backward ? 0.0 : 1.0;
    const auto schedule = ControlSchedule::from_stages(
        {{"write", 4.0, 1.0, 0.0}, {"store", 3.0, 0.0, 0.0}, {"release", 8.0, op, 1.0 - op}}, 0.0);
    const auto traj = run_protocol(m, schedule, in, {601, 0.0}, {0});
    const auto obs = observables(traj);
    const auto& rel = obs.stages.back();
    const double out = backward ? rel.backward : rel.forward;
    const double leak = backward ? rel.forward : rel.backward;
    CHECK(obs.stored_fraction > 0.99);
    CHECK(out / (obs.stored_fraction * obs.input_energy) == doctest::Approx(1.0).epsilon(0.005));
    CHECK(leak < 1e-6 * out);
  }
}

TEST_CASE("mirrored protocols give mirrored outputs") {
  const MediumParams m = dimless_medium(10.0, 4.0);
  const auto fwd = ControlSchedule::from_stages({{"w", 3.0, 1.0, 0.0}, {"h", 2.0, 1.0, 1.0}, {"r", 5.0, 0.0, 1.0}}, 0.0);
  const auto bwd = ControlSchedule::from_stages({{"w", 3.0, 0.0, 1.0}, {"h", 2.0, 1.0, 1.0}, {"r", 5.0, 1.0, 0.0}}, 0.0);
  const auto a = observables(run_protocol(m, fwd, {{1.0, 0.0}, 1.2, 0.4, Port::Forward}, {401, 0.0}, {0}));
  const auto b = observables(run_protocol(m, bwd, {{1.0, 0.0}, 1.2, 0.4, Port::Backward}, {401, 0.0}, {0}));
  for (std::size_t k = 0; k < a.stages.size(); ++k) {
    CHECK(a.stages[k].forward == doctest::Approx(b.stages[k].backward).epsilon(1e-9));
    CHECK(a.stages[k].backward == doctest::Approx(b.stages[k].forward).epsilon(1e-9));
  }
}

TEST_CASE("snapshots satisfy the polariton decomposition") {
  const auto schedule = ControlSchedule::from_stages({{"w", 3.0, 1.0, 0.0}, {"h", 1.0, 2.0, 1.0}}, 0.2);
  const auto traj = run_protocol(dimless_medium(10.0, 4.0), schedule, {{1.0, 0.0}, 1.2, 0.4, Port::Forward},
                                 {401, 0.0}, {9});
  REQUIRE(traj.snapshots.size() == 9);
  for (const auto& st : traj.snapshots) {
    const ArrayXc D = st.psi_plus - st.psi_minus;
    CHECK((D.segment(1, D.size() - 2) - st.D.segment(1, D.size() - 2)).abs().maxCoeff() < 1e-12);
    if (st.tau > 0.0 && st.t < 3.0) {
      // Single forward control: alpha = (1, 0).
      CHECK((st.psi_plus - st.S).abs().maxCoeff() <= 1e-8 * st.S.abs().maxCoeff());
    }
    if (st.t > 3.3) {
      const Alphas a = compute_alphas(2.0, 1.0);
      const ArrayXc back = a.plus * st.psi_plus + a.minus * st.psi_minus;
      CHECK((back - st.S).abs().maxCoeff() <= 1e-8 * st.S.abs().maxCoeff());
    }
  }
  CHECK(traj.snapshot_index.back() == traj.size() - 1);
}

TEST_CASE("centroid moves at the group velocity during a single-control stage") {
  const auto schedule = ControlSchedule::from_stages({{"w", 8.0, 1.0, 0.0}}, 0.0);
  const MediumParams m = dimless_medium(20.0, 8.0);
  const auto traj = run_protocol(m, schedule, {{1.0, 0.0}, 1.5, 0.4, Port::Forward}, {801, 0.0}, {0});
  // Between t = 3.5 and 5.5 the pulse is wholly inside the medium.
  auto at = [&](double t) {
    std::size_t k = 0;
    while (traj.t[k] < t) ++k;
    return std::make_pair(traj.t[k], traj.centroid[k]);
  };
  const auto [t1, c1] = at(3.5);
  const auto [t2, c2] = at(5.5);
  const double v = group_velocity(1.0, 0.0, m.g2N, m.c);
  CHECK((c2 - c1) / (t2 - t1) == doctest::Approx(v).epsilon(0.005));
}

TEST_CASE("tenfold optical depth matches the polaritons tenfold better at hold onset") {
  const ArrayXr z = nodes(1601);
  const ArrayXc S = gaussian(z, 0.5, 0.06);
  auto mismatch = [&](double d) {
    const auto st = compose_state(S, slave_difference(S, {0.5, 0.5}, d), {0.5, 0.5}, 0.0, 0.0);
    return (st.psi_plus - st.psi_minus).abs().maxCoeff() / (st.psi_plus + st.psi_minus).abs().maxCoeff();
  };
  CHECK(mismatch(10.0) / mismatch(100.0) >= 10.0 * (1.0 - 1e-9));
}
