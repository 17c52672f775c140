#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fwtlab/bohm/bohm.hpp"

using namespace fwt;

namespace {

std::vector<double> zeros(const Grid1D& g) { return std::vector<double>(std::size_t(g.n), 0.0); }

std::vector<double> harmonic(const Grid1D& g, double omega) {
  std::vector<double> v(std::size_t(g.n));
  for (Index k = 0; k < g.n; ++k) v[std::size_t(k)] = 0.5 * omega * omega * g.x(k) * g.x(k);
  return v;
}

WaveFunction1D two_packets(const Grid1D& g) {
  const WaveFunction1D a = WaveFunction1D::gaussian(g, -2.0, 0.7);
  const WaveFunction1D b = WaveFunction1D::gaussian(g, 2.0, 0.7);
  std::vector<cplx> c(std::size_t(g.n));
  double n = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] = a.amplitudes()[k] + b.amplitudes()[k];
    n += std::norm(c[k]) * g.dx;
  }
  for (cplx& x : c) x /= std::sqrt(n);
  return WaveFunction1D(g, c);
}

WaveFunction1D evolve(WaveFunction1D psi, const std::vector<double>& v, double dt, Index steps) {
  for (Index j = 0; j < steps; ++j) psi = schrodinger_step(psi, v, dt);
  return psi;
}

}  // namespace

TEST_CASE("grid and wave function guards") {
  CHECK_THROWS_AS((Grid1D{-1.0, 0.1, 100}.validate()), InvalidInput);
  CHECK_THROWS_AS((Grid1D{-1.0, 0.0, 64}.validate()), InvalidInput);
  const Grid1D g;
  CHECK(g.x_max() == doctest::Approx(10.2));
  CHECK_THROWS_AS(WaveFunction1D(g, std::vector<cplx>(512, cplx(1.0))), InvalidInput);
  CHECK_THROWS_AS(WaveFunction1D(g, std::vector<cplx>(3, cplx(1.0))), InvalidInput);
  const WaveFunction1D psi = WaveFunction1D::gaussian(g, 0.5, 1.2, 0.3);
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(psi.mean_position() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(psi.position_sd() == doctest::Approx(1.2).epsilon(1e-8));
}

TEST_CASE("schrodinger_step guards and the trivial step") {
  const Grid1D g;
  const WaveFunction1D psi = WaveFunction1D::gaussian(g, 0.0, 1.0, 0.5);
  const WaveFunction1D same = schrodinger_step(psi, zeros(g), 0.0);
  CHECK(same.amplitudes() == psi.amplitudes());
  std::vector<double> v = zeros(g);
  v[7] = 200.0;
  CHECK_THROWS_AS(schrodinger_step(psi, v, 0.001), InvalidInput);
  CHECK_NOTHROW(schrodinger_step(psi, v, 0.0004));
  CHECK_THROWS_AS(schrodinger_step(psi, std::vector<double>(5, 0.0), 0.01), InvalidInput);
  CHECK_THROWS_AS(schrodinger_step(psi, zeros(g), -0.1), InvalidInput);
}

TEST_CASE("free Gaussian spreads by the analytic law") {
  const Grid1D g;
  WaveFunction1D psi = WaveFunction1D::gaussian(g, 0.0, 1.0);
  const double dt = 0.005;
  for (int block = 1; block <= 4; ++block) {
    psi = evolve(psi, zeros(g), dt, 100);
    const double t = 0.5 * block;
    CHECK(psi.position_sd() == doctest::Approx(free_gaussian_width(1.0, t)).epsilon(1e-4));
  }
  CHECK(free_gaussian_width(1.0, 2.0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("coherent packet in a harmonic well follows the classical orbit") {
  const Grid1D g;
  const std::vector<double> v = harmonic(g, 1.0);
  WaveFunction1D psi = WaveFunction1D::gaussian(g, 1.0, std::sqrt(0.5));
  const double dt = 0.001;
  for (int block = 1; block <= 6; ++block) {
    psi = evolve(psi, v, dt, 500);
    const double t = 0.5 * block;
    CHECK(std::abs(psi.mean_position() - std::cos(t)) < 1e-4);
    CHECK(psi.position_sd() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));
  }
}

TEST_CASE("norm drift over ten thousand steps") {
  const Grid1D g;
  const std::vector<double> v = harmonic(g, 0.8);
  WaveFunction1D psi = two_packets(g);
  double worst = 0.0;
  for (int j = 0; j < 10000; ++j) {
    const double before = psi.norm();
    psi = schrodinger_step(psi, v, 0.001);
    worst = std::max(worst, std::abs(psi.norm() - before));
  }
  CHECK(worst <= 1e-10);
  CHECK(std::abs(psi.norm() - 1.0) <= 1e-7);
}

TEST_CASE("guidance velocity") {
  const Grid1D g;
  const WaveFunction1D real = WaveFunction1D::gaussian(g, 0.3, 0.8);
  for (double z : {-2.0, -0.1, 0.0, 1.7}) CHECK(std::abs(guidance_velocity(real, z)) < 1e-12);

  const double k = 1.3;
  const WaveFunction1D moving = WaveFunction1D::gaussian(g, 0.0, 1.0, k);
  for (double z : {-3.0, -1.0, 0.0, 0.77, 2.5}) {
    CHECK(std::abs(guidance_velocity(moving, z) - k) < 1e-6);
  }
  const WaveFunction1D heavy = WaveFunction1D::gaussian(g, 0.0, 1.0, k, 2.0);
  CHECK(std::abs(guidance_velocity(heavy, 0.4) - k / 2.0) < 1e-6);

  CHECK_THROWS_AS(guidance_velocity(moving, g.x_min), InvalidInput);
  // odd first excited state: exact node at the origin
  std::vector<cplx> odd(std::size_t(g.n));
  double n = 0.0;
  for (Index j = 0; j < g.n; ++j) {
    odd[std::size_t(j)] = g.x(j) * std::exp(-0.5 * g.x(j) * g.x(j));
    n += std::norm(odd[std::size_t(j)]) * g.dx;
  }
  for (cplx& c : odd) c /= std::sqrt(n);
  CHECK_THROWS_AS(guidance_velocity(WaveFunction1D(g, odd), 0.0), InvalidInput);
}

TEST_CASE("quantum potential against analytic Gaussian derivatives") {
  const Grid1D g;
  // R = exp(-x^2 / (4 s^2)): R''/R = x^2 / (4 s^4) - 1 / (2 s^2)
  for (double s : {0.8, 1.0, 1.5}) {
    const WaveFunction1D psi = WaveFunction1D::gaussian(g, 0.0, s, 0.9);
    for (double z : {0.0, 0.5, -1.3, 2.2}) {
      const double rpp = z * z / (4 * s * s * s * s) - 1.0 / (2 * s * s);
      CHECK(std::abs(quantum_potential(psi, z) + 0.5 * rpp) < 1e-4);
    }
  }
  // harmonic ground state: V + V_rho flat, so trajectories stay at rest
  const WaveFunction1D ground = WaveFunction1D::gaussian(g, 0.0, std::sqrt(0.5));
  const double c0 = quantum_potential(ground, 0.0);
  for (double z = -3.0; z <= 3.0; z += 0.37) {
    CHECK(std::abs(0.5 * z * z + quantum_potential(ground, z) - c0) < 1e-4);
    CHECK(std::abs(guidance_velocity(ground, z)) < 1e-12);
  }
}

TEST_CASE("initial position sampling") {
  const Grid1D g;
  const WaveFunction1D psi = WaveFunction1D::gaussian(g, 0.0, 1.0);
  const Index n = 10000;
  const std::vector<double> z = sample_initial_positions(psi, n, 11);
  CHECK(z == sample_initial_positions(psi, n, 11));
  CHECK(z != sample_initial_positions(psi, n, 12));
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / double(n);
  CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
  CHECK(ks_distance(z, g, psi.cell_probabilities()) <= 0.02);
  CHECK(ks_distance(z, g, WaveFunction1D::gaussian(g, 0.3, 1.0).cell_probabilities()) > 0.05);
}

TEST_CASE("KS distance on a hand-checked case") {
  const Grid1D g{0.0, 1.0, 16};
  std::vector<double> p(16, 0.0);
  p[4] = 1.0;  // uniform on [3.5, 4.5)
  CHECK(ks_distance({4.0}, g, p) == doctest::Approx(0.5));
  CHECK(ks_distance({3.75, 4.25}, g, p) == doctest::Approx(0.25));
  CHECK(ks_distance({3.5, 3.5}, g, p) == doctest::Approx(1.0));
  CHECK(ks_critical_5pct(10000) == doctest::Approx(0.01358));
}

TEST_CASE("free Gaussian trajectories follow the scaling law") {
  const Grid1D g;
  const WaveFunction1D psi = WaveFunction1D::gaussian(g, 0.0, 1.0);
  const BohmEnsembleResult r =
      run_controlled_ensemble(psi, zeros(g), 500, DelayedControlSpec{}, 2.0, 0.002, 5);
  const double scale = free_gaussian_width(1.0, 2.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.final_positions.size(); ++i) {
    worst = std::max(worst, std::abs(r.final_positions[i] - r.initial_positions[i] * scale));
  }
  CHECK(worst < 1e-3);
  CHECK(r.frozen_steps == 0);
  CHECK(r.order_preserved);
}

TEST_CASE("equivariance under instantaneous control at three checkpoints") {
  const Grid1D g;
  DelayedControlSpec spec;
  spec.lambda = 0.5;
  const BohmEnsembleResult r =
      run_controlled_ensemble(two_packets(g), zeros(g), 10000, spec, 1.5, 0.001, 7, {500, 1000, 1500});
  REQUIRE(r.checkpoint_positions.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(ks_distance(r.checkpoint_positions[c], g, r.checkpoint_probabilities[c]) <=
          ks_critical_5pct(10000));
  }
  CHECK(r.order_preserved);
  CHECK_FALSE(r.unreliable);
}

TEST_CASE("Newton form of the guidance law") {
  const Grid1D g;
  const NewtonResidual free =
      newton_residual(WaveFunction1D::gaussian(g, 0.0, 1.0), zeros(g), 100, 1.0, 0.001, 3);
  CHECK(free.rms <= 5e-3);
  CHECK(free.samples > 90000);
  // ground state: at rest, with V' and V_rho' cancelling
  const NewtonResidual ground = newton_residual(WaveFunction1D::gaussian(g, 0.0, std::sqrt(0.5)),
                                                harmonic(g, 1.0), 100, 1.0, 0.001, 3);
  CHECK(ground.rms <= 5e-3);
}

TEST_CASE("delayed control") {
  const Grid1D g;
  const WaveFunction1D psi = WaveFunction1D::gaussian(g, 0.0, 1.0);
  DelayedControlSpec off;
  off.mode = DelayedControlSpec::Mode::delayed;
  off.tau = 0.2;
  const BohmEnsembleResult a = run_controlled_ensemble(psi, zeros(g), 300, off, 1.0, 0.002, 9);
  const BohmEnsembleResult b =
      run_controlled_ensemble(psi, zeros(g), 300, DelayedControlSpec{}, 1.0, 0.002, 9);
  CHECK(a.final_positions == b.final_positions);

  DelayedControlSpec on = off;
  on.lambda = 1.0;
  const Index n = 3000;
  const BohmEnsembleResult r = run_controlled_ensemble(psi, zeros(g), n, on, 1.0, 0.002, 9);
  const std::vector<double> orth = orthodox_prediction(psi, zeros(g), on, 1.0, 0.002);
  CHECK(std::accumulate(orth.begin(), orth.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ks_distance(r.final_positions, g, orth) > 3.0 * ks_critical_5pct(n));

  // a single bin is no measurement at all
  const std::vector<double> whole = orthodox_prediction(psi, zeros(g), off, 1.0, 0.002, g.n);
  const std::vector<double> plain = evolve(psi, zeros(g), 0.002, 500).cell_probabilities();
  double err = 0.0;
  for (std::size_t k = 0; k < whole.size(); ++k) err = std::max(err, std::abs(whole[k] - plain[k]));
  CHECK(err < 1e-12);

  DelayedControlSpec bad = on;
  bad.tau = 0.201;
  CHECK_THROWS_AS(run_controlled_ensemble(psi, zeros(g), 10, bad, 1.0, 0.002, 9), InvalidInput);
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(1.0, 0.002), InvalidInput);
  DelayedControlSpec inst;
  inst.tau = 0.1;
  CHECK_THROWS_AS(inst.validate(1.0, 0.002), InvalidInput);
}
