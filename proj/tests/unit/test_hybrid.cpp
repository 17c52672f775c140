#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "fwtlab/core/ops.hpp"
#include "fwtlab/core/random.hpp"
#include "fwtlab/hybrid/hybrid.hpp"
#include "fwtlab/measurement/sme.hpp"
#include "test_support.hpp"

using namespace fwt;

namespace {

HybridSpec meanfield_spec() {
  HybridSpec s;
  s.mode = HybridSpec::Mode::mean_field;
  s.h = Observable::from_matrix(0.5 * ops::sigma_x());
  s.f = Observable::from_matrix(ops::sigma_z());
  s.q = Observable::from_matrix(ops::sigma_z());
  s.kappa = 0.5;
  s.drift = 1.0;
  s.dt = 0.01;
  s.steps = 100;
  return s;
}

HybridSpec measurement_spec() {
  HybridSpec s = meanfield_spec();
  s.mode = HybridSpec::Mode::measurement;
  s.drift = 0.0;
  s.gamma = 1.0;
  s.lambda = 0.5;
  s.n = 5000;
  s.seed = 29;
  return s;
}

HybridSpec two_cell_spec() {
  HybridSpec s = meanfield_spec();
  s.grid = HybridGrid{-1.0, 1.0, 2};
  s.dt = 0.1;
  return s;
}

// One explicit operator-split step for any grid, written face by face:
// velocities from the incoming state, per-cell unitary, then donor-cell
// exchange with closed outer walls.
std::vector<Matrix> meanfield_oracle(const std::vector<Matrix>& in, const HybridSpec& s) {
  const std::size_t n = in.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = s.drift * (s.f.matrix() * in[i]).trace().real() / in[i].trace().real();
  }
  std::vector<Matrix> rot(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix gen = s.h.matrix() + s.kappa * s.grid.center(Index(i)) * s.f.matrix();
    const Matrix mi = cplx(0.0, -s.dt) * gen;
    const Matrix u = mi.exp();
    rot[i] = u * in[i] * u.adjoint();
  }
  const double k = s.dt / s.grid.dz;
  std::vector<Matrix> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Matrix r = rot[i];
    if (i + 1 < n && v[i] > 0.0) r -= k * v[i] * rot[i];
    if (i > 0 && v[i] < 0.0) r += k * v[i] * rot[i];
    if (i > 0 && v[i - 1] > 0.0) r += k * v[i - 1] * rot[i - 1];
    if (i + 1 < n && v[i + 1] < 0.0) r -= k * v[i + 1] * rot[i + 1];
    out[i] = r;
  }
  return out;
}

HybridDensity qubit_product(Index k, const HybridGrid& g, double center, double width) {
  return hybrid_product(DensityMatrix::basis(2, k), gaussian_density(g, center, width), g);
}

HybridDensity mix(double alpha, const HybridDensity& a, const HybridDensity& b) {
  std::vector<Matrix> c;
  for (Index i = 0; i < a.grid().cells; ++i) c.push_back(alpha * a.cell(i) + (1 - alpha) * b.cell(i));
  return HybridDensity(a.grid(), c);
}

}  // namespace

TEST_CASE("grid and density construction") {
  HybridGrid g;
  CHECK(g.center(0) == doctest::Approx(-3.9375));
  CHECK(g.cell_of(0.01) == 32);
  CHECK(g.cell_of(-100.0) == 0);
  CHECK(g.cell_of(100.0) == 63);
  CHECK_THROWS_AS((HybridGrid{0.0, 0.0, 8}.validate()), InvalidInput);
  CHECK_THROWS_AS((HybridGrid{0.0, 0.1, 1}.validate()), InvalidInput);

  const RealVector pm = point_mass(g, 0.3);
  CHECK(pm.sum() * g.dz == doctest::Approx(1.0));
  const RealVector gd = gaussian_density(g, 0.0, 0.5);
  CHECK(gd.sum() * g.dz == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gd.minCoeff() >= 0.0);

  std::vector<Matrix> bad(64, Matrix::Identity(2, 2));
  CHECK_THROWS_AS(HybridDensity(g, bad), InvalidInput);
  std::vector<Matrix> neg(64, Matrix::Zero(2, 2));
  neg[0] = Matrix::Identity(2, 2) * 8.0;
  neg[0](1, 1) = -0.5;
  neg[1](1, 1) = 0.5;
  CHECK_THROWS_AS(HybridDensity(g, neg), InvalidInput);
  CHECK_THROWS_AS(HybridDensity(g, std::vector<Matrix>(3, Matrix::Identity(2, 2))),
                  InvalidInput);
}

TEST_CASE("product hybrid marginals and block embedding") {
  const HybridGrid g;
  const DensityMatrix rho = random_density_matrix(3, 2, 4);
  const RealVector rc = gaussian_density(g, 0.7, 0.4);
  const HybridDensity hd = hybrid_product(rho, rc, g);
  CHECK(hd.total_trace() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(max_abs(hd.quantum_marginal() - rho.matrix()) < 1e-13);
  CHECK((hd.classical_marginal() - rc).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix b = hd.block_diagonal();
  CHECK(b.rows() == 3 * 64);
  CHECK(b.trace().real() == doctest::Approx(1.0).epsilon(1e-13));
  const HybridDensity back = HybridDensity::from_block_diagonal(g, 3, b);
  CHECK(hybrid_distance(hd, back) < 1e-13);

  Matrix coh = b;
  coh(0, 5) = coh(5, 0) = 0.01;
  CHECK_THROWS_AS(HybridDensity::from_block_diagonal(g, 3, coh), InvalidInput);

  // the hybrid distance is the trace norm of the block embedding
  const HybridDensity other = hybrid_product(random_density_matrix(3, 3, 5), rc, g);
  CHECK(hybrid_distance(hd, other) ==
        doctest::Approx(trace_norm(hd.block_diagonal() - other.block_diagonal())).epsilon(1e-10));
  const HybridDensity shifted = hybrid_product(rho, gaussian_density(g, -1.5, 0.4), g);
  // two unit-mass Gaussians: 2 erf(separation / (2 sqrt2 width))
  CHECK(hybrid_distance(hd, shifted) ==
        doctest::Approx(2.0 * std::erf(2.2 / (2.0 * std::sqrt(2.0) * 0.4))).epsilon(1e-3));
}

TEST_CASE("mean-field step matches the explicit two-cell oracle") {
  const HybridSpec s = two_cell_spec();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    const double w = u(eng);
    const std::vector<Matrix> cells{random_density_matrix(2, 2, seed).matrix() * w,
                                    random_density_matrix(2, 1, seed + 100).matrix() * (1 - w)};
    const HybridDensity hd(s.grid, cells);
    const HybridDensity next = meanfield_hybrid_step(hd, s, s.dt);
    const std::vector<Matrix> ref = meanfield_oracle(cells, s);
    CHECK(max_abs(next.cell(0) - ref[0]) < 1e-13);
    CHECK(max_abs(next.cell(1) - ref[1]) < 1e-13);
  }
}

TEST_CASE("mean-field step matches the oracle on the default grid") {
  const HybridSpec s = meanfield_spec();
  HybridDensity hd = mix(0.3, qubit_product(0, s.grid, 0.5, 0.5), qubit_product(1, s.grid, -0.5, 0.6));
  for (int j = 0; j < 5; ++j) {
    const std::vector<Matrix> ref = meanfield_oracle(hd.cells(), s);
    hd = meanfield_hybrid_step(hd, s, s.dt);
    double err = 0.0;
    for (Index i = 0; i < s.grid.cells; ++i) err = std::max(err, max_abs(hd.cell(i) - ref[std::size_t(i)]));
    CHECK(err < 1e-12);
  }
}

TEST_CASE("mean-field map is not mixture-linear") {
  const HybridSpec s = two_cell_spec();
  const RealVector flat = RealVector::Constant(2, 0.5);
  const HybridDensity a = hybrid_product(DensityMatrix::basis(2, 0), flat, s.grid);
  const HybridDensity b = hybrid_product(DensityMatrix::basis(2, 1), flat, s.grid);
  const HybridDensity m = mix(0.5, a, b);
  const HybridDensity lhs = meanfield_hybrid_step(m, s, s.dt);
  const HybridDensity rhs =
      mix(0.5, meanfield_hybrid_step(a, s, s.dt), meanfield_hybrid_step(b, s, s.dt));
  CHECK(hybrid_distance(lhs, rhs) > 1e-4);

  const HybridSpec big = meanfield_spec();
  const HybridDensity p = qubit_product(0, big.grid, 0.0, 0.5);
  const HybridDensity q = qubit_product(1, big.grid, 0.0, 0.5);
  const HybridDensity far = meanfield_hybrid_evolve(mix(0.5, p, q), big);
  const HybridDensity sep =
      mix(0.5, meanfield_hybrid_evolve(p, big), meanfield_hybrid_evolve(q, big));
  CHECK(hybrid_distance(far, sep) > 1e-4);
}

TEST_CASE("mean-field without coupling leaves the hybrid frozen") {
  HybridSpec s = meanfield_spec();
  s.h = Observable::from_matrix(Matrix::Zero(2, 2));
  s.kappa = 0.0;
  s.drift = 0.0;
  const HybridDensity hd =
      mix(0.4, qubit_product(0, s.grid, 1.0, 0.3), qubit_product(1, s.grid, -1.0, 0.3));
  CHECK(hybrid_distance(meanfield_hybrid_evolve(hd, s), hd) < 1e-14);
}

TEST_CASE("mean-field conserves trace and positivity; CFL is enforced") {
  HybridSpec s = meanfield_spec();
  s.steps = 300;
  const HybridDensity out = meanfield_hybrid_evolve(qubit_product(0, s.grid, 0.0, 0.3), s);
  CHECK(out.total_trace() == doctest::Approx(1.0).epsilon(1e-12));
  for (const Matrix& c : out.cells()) {
    const Matrix n = c / std::max(c.trace().real(), 1e-300);
    CHECK(test::density_invariants_hold(DensityMatrix::unchecked(n), 1e-9));
  }
  // mass pushed to the upper wall stays on the grid
  CHECK(out.classical_marginal().tail(32).sum() > out.classical_marginal().head(32).sum());

  s.drift = 20.0;
  CHECK_THROWS_AS(meanfield_hybrid_step(qubit_product(0, s.grid, 0.0, 0.3), s, s.dt),
                  InvalidInput);
}

TEST_CASE("measurement step without label feedback matches sme_step cell by cell") {
  HybridSpec s = measurement_spec();
  s.lambda = 0.0;
  s.kappa = 0.0;
  SmeConfig c;
  c.gamma = s.gamma;
  c.q = s.q;
  c.h = s.h;
  c.f = Observable::from_matrix(Matrix::Zero(2, 2));
  c.dt = s.dt;
  const RealVector rc = gaussian_density(s.grid, 0.2, 0.7);
  DensityMatrix rho = random_density_matrix(2, 2, 8);
  HybridDensity hd = hybrid_product(rho, rc, s.grid);
  std::mt19937_64 eng(3);
  std::normal_distribution<double> dw(0.0, std::sqrt(s.dt));
  for (int j = 0; j < 50; ++j) {
    const double noise = dw(eng);
    const HybridStepResult hr = measurement_hybrid_step(hd, s, noise);
    const SmeStepResult sr = sme_step(rho, c, noise, 0.0);
    CHECK(hr.z == doctest::Approx(sr.z).epsilon(1e-12));
    CHECK(hr.mean_q == doctest::Approx(sr.mean_q).epsilon(1e-12));
    double err = 0.0;
    for (Index i = 0; i < s.grid.cells; ++i) {
      err = std::max(err, max_abs(hr.state.cell(i) - rc(i) * sr.rho.matrix()));
    }
    CHECK(err < 1e-12);
    hd = hr.state;
    rho = sr.rho;
  }
}

TEST_CASE("measurement step moves the label by lambda times the record") {
  HybridSpec s = measurement_spec();
  s.kappa = 0.0;
  s.h = Observable::from_matrix(Matrix::Zero(2, 2));
  const HybridDensity hd = hybrid_product(DensityMatrix::basis(2, 0), point_mass(s.grid, 0.0), s.grid);
  const auto mean_label = [&](const HybridDensity& x) {
    double m = 0.0;
    for (Index i = 0; i < s.grid.cells; ++i) m += s.grid.center(i) * x.cell(i).trace().real() * s.grid.dz;
    return m;
  };
  for (double noise : {-0.05, 0.0, 0.02, 0.08}) {
    const HybridStepResult r = measurement_hybrid_step(hd, s, noise);
    CHECK(mean_label(r.state) - mean_label(hd) ==
          doctest::Approx(s.lambda * r.z * s.dt).epsilon(1e-12));
    CHECK(r.state.total_trace() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("measurement ensemble: trace, positivity, determinism") {
  HybridSpec s = measurement_spec();
  const HybridDensity hd = qubit_product(0, s.grid, 0.0, 0.5);
  const SampleSet a = hybrid_final_states(hd, s, 20, 5);
  const SampleSet b = hybrid_final_states(hd, s, 20, 5);
  CHECK(a.data() == b.data());
  CHECK(a.blocks() == 64);
  for (Index t = 0; t < a.size(); ++t) {
    double tr = 0.0;
    for (Index i = 0; i < a.blocks(); ++i) {
      const Matrix blk = a.block(a.data().row(t), i);
      tr += blk.trace().real() * s.grid.dz;
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (blk + blk.adjoint()));
      CHECK(es.eigenvalues()(0) > -1e-10);
    }
    CHECK(tr == doctest::Approx(1.0).epsilon(1e-12));
  }
  HybridSpec m = meanfield_spec();
  CHECK_THROWS_AS(hybrid_final_states(hd, m, 4, 1), InvalidInput);
}

TEST_CASE("record-driven hybrid feedback is mixture-linear; the stripped drift is not") {
  const HybridSpec s = measurement_spec();
  const HybridDensity r1 = qubit_product(0, s.grid, 0.0, 0.5);
  const HybridDensity r2 = qubit_product(1, s.grid, 0.0, 0.5);
  const HybridDensity m = mix(0.5, r1, r2);
  MixtureLinearityOptions opts;
  opts.bootstrap_seed = 1;

  const SampleSet a = hybrid_final_states(m, s, s.n, 11);
  const SampleSet b = hybrid_final_states(r1, s, s.n, 12);
  const SampleSet c = hybrid_final_states(r2, s, s.n, 13);
  const MixtureLinearityStats rec = mixture_linearity(a, b, c, 0.5, opts);
  CHECK(rec.deficit <= rec.bound);
  CHECK(rec.scaling_ratio >= 4.0 / 3.0);

  HybridSpec st = s;
  st.strip_noise = true;
  st.lambda = 4.0;
  st.steps = 50;
  st.n = 4096;
  const SampleSet sa = hybrid_final_states(m, st, st.n, 11);
  const SampleSet sb = hybrid_final_states(r1, st, st.n, 12);
  const SampleSet sc = hybrid_final_states(r2, st, st.n, 13);
  const MixtureLinearityStats str = mixture_linearity(sa, sb, sc, 0.5, opts);
  CHECK(str.deficit > 10.0 * str.bound);
  CHECK(str.scaling_ratio < 4.0 / 3.0);
}

TEST_CASE("hybrid maps as dynamical maps") {
  const HybridSpec mf = meanfield_spec();
  const DynamicalMap m = hybrid_meanfield_map(mf);
  CHECK(m.dim == 128);
  CHECK(m.kind == DynamicalMap::Kind::exact);
  const DensityMatrix p = m.probe(3);
  CHECK(p.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  const DensityMatrix out = m.evaluate(p);
  CHECK(out.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));

  const DynamicalMap mm = hybrid_measurement_map(measurement_spec());
  CHECK(mm.kind == DynamicalMap::Kind::monte_carlo);
  const SampleSet s = mm.sample(p, 3, 1);
  CHECK(s.size() == 3);
}
