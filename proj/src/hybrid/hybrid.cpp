#include "fwtlab/hybrid/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fwtlab/core/random.hpp"
#include "fwtlab/measurement/sme.hpp"

namespace fwt {

void HybridGrid::validate() const {
  if (!(dz > 0.0) || !std::isfinite(dz) || !std::isfinite(z_min)) {
    throw InvalidInput("HybridGrid: dz must be positive and finite");
  }
  if (cells < 2 || cells > 4096) throw InvalidInput("HybridGrid: cells must be in [2, 4096]");
}

Index HybridGrid::cell_of(double z) const {
  const auto i = static_cast<Index>(std::floor((z - z_min) / dz));
  return std::clamp<Index>(i, 0, cells - 1);
}

HybridDensity::HybridDensity(HybridGrid grid, std::vector<Matrix> cells)
    : grid_(grid), cells_(std::move(cells)) {
  grid_.validate();
  if (static_cast<Index>(cells_.size()) != grid_.cells) {
    throw InvalidInput("HybridDensity: one matrix per grid cell required");
  }
  const Index d = cells_.front().rows();
  for (Matrix& c : cells_) {
    if (c.rows() != d || c.cols() != d) {
      throw InvalidInput("HybridDensity: cells must be square and equal in size");
    }
    if (hermiticity_error(c) > 1e-10) throw InvalidInput("HybridDensity: non-Hermitian cell");
    c = 0.5 * (c + c.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -1e-10) throw InvalidInput("HybridDensity: cell not PSD");
  }
  if (std::abs(total_trace() - 1.0) > 1e-8) {
    throw InvalidInput("HybridDensity: total trace " + std::to_string(total_trace()));
  }
}

double HybridDensity::total_trace() const {
  double t = 0.0;
  for (const Matrix& c : cells_) t += c.trace().real();
  return t * grid_.dz;
}

RealVector HybridDensity::classical_marginal() const {
  RealVector m(grid_.cells);
  for (Index i = 0; i < grid_.cells; ++i) m(i) = cell(i).trace().real();
  return m;
}

Matrix HybridDensity::quantum_marginal() const {
  Matrix m = Matrix::Zero(dim(), dim());
  for (const Matrix& c : cells_) m += c;
  return m * grid_.dz;
}

Matrix HybridDensity::block_diagonal() const {
  const Index d = dim();
  Matrix m = Matrix::Zero(d * grid_.cells, d * grid_.cells);
  for (Index i = 0; i < grid_.cells; ++i) m.block(i * d, i * d, d, d) = cell(i) * grid_.dz;
  return m;
}

HybridDensity HybridDensity::from_block_diagonal(const HybridGrid& grid, Index dim,
                                                 const Matrix& m) {
  if (m.rows() != dim * grid.cells || m.cols() != m.rows()) {
    throw InvalidInput("HybridDensity: block matrix has the wrong size");
  }
  Matrix off = m;
  std::vector<Matrix> cells;
  for (Index i = 0; i < grid.cells; ++i) {
    cells.push_back(m.block(i * dim, i * dim, dim, dim) / grid.dz);
    off.block(i * dim, i * dim, dim, dim).setZero();
  }
  if (max_abs(off) > 1e-12) {
    throw InvalidInput("HybridDensity: coherences between classical cells");
  }
  return HybridDensity(grid, std::move(cells));
}

double hybrid_distance(const HybridDensity& a, const HybridDensity& b) {
  if (a.grid().cells != b.grid().cells || a.dim() != b.dim()) {
    throw InvalidInput("hybrid_distance: mismatched hybrids");
  }
  double total = 0.0;
  for (Index i = 0; i < a.grid().cells; ++i) total += trace_norm(a.cell(i) - b.cell(i));
  return total * a.grid().dz;
}

HybridDensity hybrid_product(const DensityMatrix& rho, const RealVector& rho_c,
                             const HybridGrid& grid) {
  grid.validate();
  if (rho_c.size() != grid.cells) throw InvalidInput("hybrid_product: grid size mismatch");
  if (rho_c.minCoeff() < 0.0) throw InvalidInput("hybrid_product: negative classical density");
  if (std::abs(rho_c.sum() * grid.dz - 1.0) > 1e-8) {
    throw InvalidInput("hybrid_product: classical density not normalized");
  }
  std::vector<Matrix> cells;
  for (Index i = 0; i < grid.cells; ++i) cells.push_back(rho_c(i) * rho.matrix());
  return HybridDensity(grid, std::move(cells));
}

RealVector point_mass(const HybridGrid& grid, double z0) {
  grid.validate();
  RealVector r = RealVector::Zero(grid.cells);
  r(grid.cell_of(z0)) = 1.0 / grid.dz;
  return r;
}

RealVector gaussian_density(const HybridGrid& grid, double center, double width) {
  grid.validate();
  if (!(width > 0.0)) throw InvalidInput("gaussian_density: width must be positive");
  RealVector r(grid.cells);
  for (Index i = 0; i < grid.cells; ++i) {
    const double x = (grid.center(i) - center) / width;
    r(i) = std::exp(-0.5 * x * x);
  }
  return r / (r.sum() * grid.dz);
}

void HybridSpec::validate() const {
  grid.validate();
  const Index d = h.dim();
  if (d < 2 || f.dim() != d || q.dim() != d) {
    throw InvalidInput("HybridSpec: H, F and q must share a dimension >= 2");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("HybridSpec: dt must be > 0");
  if (!std::isfinite(kappa) || !std::isfinite(drift) || !std::isfinite(lambda)) {
    throw InvalidInput("HybridSpec: couplings must be finite");
  }
  if (mode == Mode::measurement) {
    if (!(gamma > 0.0)) throw InvalidInput("HybridSpec: gamma must be > 0");
    if (gamma * dt > SmeConfig::kMaxGammaDt) {
      throw InvalidInput("HybridSpec: gamma * dt exceeds 0.05");
    }
  }
  if (steps < 1 || n < 1) throw InvalidInput("HybridSpec: steps and n must be >= 1");
}

namespace {

/// Cell updates on a working basis (the q eigenbasis in measurement mode),
/// templated so qubits use fixed-size storage.
template <class M>
class HybridEngine {
 public:
  using RV = Eigen::Matrix<double, M::RowsAtCompileTime, 1>;

  explicit HybridEngine(const HybridSpec& spec) : spec_(spec) {
    spec.validate();
    const Index d = spec.dim();
    if (spec.mode == HybridSpec::Mode::measurement) {
      v_ = spec.q.eigenvectors();
      qk_ = spec.q.eigenvalues();
    } else {
      v_ = Matrix::Identity(d, d);
      qk_ = RV::Zero(d);
    }
    a_ = 2.0 * std::sqrt(spec.gamma) * spec.dt;
    mu_ = a_ * qk_;
    const Matrix vd = v_;
    const Matrix f_work = vd.adjoint() * spec.f.matrix() * vd;
    f_ = f_work;
    for (Index i = 0; i < spec.grid.cells; ++i) {
      const Matrix gen = spec.h.matrix() + spec.kappa * spec.grid.center(i) * spec.f.matrix();
      const Matrix u = UnitaryOperator::exp_i(Observable::from_matrix(0.5 * (gen + gen.adjoint())),
                                              spec.dt)
                           .matrix();
      u_.push_back(vd.adjoint() * u * vd);
    }
  }

  std::vector<M> load(const HybridDensity& hd) const {
    if (hd.dim() != spec_.dim() || hd.grid().cells != spec_.grid.cells) {
      throw InvalidInput("hybrid: state does not match the spec grid or dimension");
    }
    std::vector<M> c;
    for (const Matrix& m : hd.cells()) c.push_back(v_.adjoint() * m * v_);
    return c;
  }

  std::vector<Matrix> unload(const std::vector<M>& c) const {
    std::vector<Matrix> out;
    for (const M& m : c) out.push_back(v_ * m * v_.adjoint());
    return out;
  }

  void unitary(std::vector<M>& c) const {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = u_[i] * c[i] * u_[i].adjoint();
  }

  std::vector<double> meanfield_velocity(const std::vector<M>& c) const {
    std::vector<double> v(c.size(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double tr = c[i].trace().real();
      if (tr > 1e-300) v[i] = spec_.drift * (f_ * c[i]).trace().real() / tr;
    }
    return v;
  }

  /// Donor-cell transport with per-cell velocities; zero flux at the edges.
  void transport(std::vector<M>& c, const std::vector<double>& v, double dt) const {
    const double k = dt / spec_.grid.dz;
    const std::size_t n = c.size();
    for (double vi : v) {
      if (std::abs(vi) * k > 1.0) {
        throw InvalidInput("hybrid: CFL violation, |v| dt = " + std::to_string(std::abs(vi) * dt) +
                           " > dz; reduce dt");
      }
    }
    std::vector<M> out = c;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      // flux across the face between i and i + 1
      const M flux = std::max(v[i], 0.0) * k * c[i] - std::max(-v[i + 1], 0.0) * k * c[i + 1];
      out[i] -= flux;
      out[i + 1] += flux;
    }
    c = std::move(out);
  }

  /// Rigid shift of every cell by `displacement`, in substeps of at most
  /// one cell.
  void shift(std::vector<M>& c, double displacement) const {
    const double courant = std::abs(displacement) / spec_.grid.dz;
    if (courant == 0.0) return;
    const int parts = std::max(1, static_cast<int>(std::ceil(courant)));
    const double k = courant / parts;
    const std::size_t last = c.size() - 1;
    for (int p = 0; p < parts; ++p) {
      if (displacement > 0.0) {
        c[last] += k * c[last - 1];
        for (std::size_t i = last - 1; i > 0; --i) c[i] = (1.0 - k) * c[i] + k * c[i - 1];
        c[0] *= (1.0 - k);
      } else {
        c[0] += k * c[1];
        for (std::size_t i = 1; i < last; ++i) c[i] = (1.0 - k) * c[i] + k * c[i + 1];
        c[last] *= (1.0 - k);
      }
    }
  }

  /// Shared-record measurement of q; returns the record and sets the
  /// hybrid-averaged tr(q rho) before the update.
  double measure(std::vector<M>& c, double xi, double& mean_q) const {
    const Index d = spec_.dim();
    RV w = RV::Zero(d);
    for (const M& m : c) w += m.diagonal().real();
    w = w.cwiseMax(0.0);
    w /= w.sum();
    mean_q = w.dot(qk_);
    const double s = std::sqrt(spec_.dt);
    const double y = gaussian_mixture_quantile(w.data(), mu_.data(), static_cast<int>(d), s, xi);
    RV e(d);
    for (Index k = 0; k < d; ++k) e(k) = (y - mu_(k)) * (y - mu_(k)) / (4.0 * spec_.dt);
    const double emin = e.minCoeff();
    RV m(d);
    for (Index k = 0; k < d; ++k) m(k) = std::exp(emin - e(k));
    double total = 0.0;
    for (M& x : c) {
      x = m.asDiagonal() * x * m.asDiagonal();
      total += x.trace().real();
    }
    total *= spec_.grid.dz;
    for (M& x : c) x /= total;
    return y / a_;
  }

  void check_positive(const std::vector<M>& c) const {
    for (const M& m : c) {
      Eigen::SelfAdjointEigenSolver<M> es(m, Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) < -1e-8) {
        throw NumericalFailure("hybrid: cell lost positivity beyond -1e-8");
      }
    }
  }

  double measurement_step(std::vector<M>& c, double xi, double& mean_q) const {
    unitary(c);
    const double z = measure(c, xi, mean_q);
    shift(c, spec_.lambda * (spec_.strip_noise ? mean_q : z) * spec_.dt);
    return z;
  }

  void meanfield_step(std::vector<M>& c, double dt) const {
    const std::vector<double> v = meanfield_velocity(c);
    unitary(c);
    transport(c, v, dt);
  }

 private:
  const HybridSpec& spec_;
  M v_, f_;
  RV qk_, mu_;
  double a_ = 0.0;
  std::vector<M> u_;
};

template <class M>
void final_states(const HybridDensity& hd, const HybridSpec& spec, Index n,
                  std::uint64_t seed, SampleSet& out) {
  const HybridEngine<M> engine(spec);
  const std::vector<M> start = engine.load(hd);
  const Index d = spec.dim();
  const M v = spec.q.eigenvectors();
  for (Index t = 0; t < n; ++t) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<M> c = start;
    double mean_q = 0.0;
    for (Index j = 0; j < spec.steps; ++j) engine.measurement_step(c, n01(rng), mean_q);
    for (Index i = 0; i < spec.grid.cells; ++i) {
      const M back = v * c[static_cast<std::size_t>(i)] * v.adjoint();
      out.data().row(t).segment(i * d * d, d * d) =
          Eigen::Map<const RowVector>(back.data(), d * d);
    }
  }
}

}  // namespace

HybridDensity meanfield_hybrid_step(const HybridDensity& hd, const HybridSpec& spec,
                                    double dt) {
  HybridSpec s = spec;
  s.dt = dt;
  s.mode = HybridSpec::Mode::mean_field;
  const HybridEngine<Matrix> engine(s);
  std::vector<Matrix> c = engine.load(hd);
  engine.meanfield_step(c, dt);
  engine.check_positive(c);
  return HybridDensity(hd.grid(), engine.unload(c));
}

HybridDensity meanfield_hybrid_evolve(const HybridDensity& hd, const HybridSpec& spec) {
  HybridSpec s = spec;
  s.mode = HybridSpec::Mode::mean_field;
  const HybridEngine<Matrix> engine(s);
  std::vector<Matrix> c = engine.load(hd);
  for (Index j = 0; j < spec.steps; ++j) engine.meanfield_step(c, spec.dt);
  engine.check_positive(c);
  return HybridDensity(hd.grid(), engine.unload(c));
}

HybridStepResult measurement_hybrid_step(const HybridDensity& hd, const HybridSpec& spec,
                                         double dw) {
  if (spec.mode != HybridSpec::Mode::measurement) {
    throw InvalidInput("measurement_hybrid_step: spec is not in measurement mode");
  }
  if (!std::isfinite(dw)) throw InvalidInput("measurement_hybrid_step: non-finite dW");
  const HybridEngine<Matrix> engine(spec);
  std::vector<Matrix> c = engine.load(hd);
  double mean_q = 0.0;
  const double z = engine.measurement_step(c, dw / std::sqrt(spec.dt), mean_q);
  engine.check_positive(c);
  return {HybridDensity(hd.grid(), engine.unload(c)), z, mean_q};
}

SampleSet hybrid_final_states(const HybridDensity& hd, const HybridSpec& spec, Index n,
                              std::uint64_t seed) {
  if (spec.mode != HybridSpec::Mode::measurement) {
    throw InvalidInput("hybrid_final_states: spec is not in measurement mode");
  }
  spec.validate();
  if (n < 1) throw InvalidInput("hybrid_final_states: n must be >= 1");
  SampleSet out(spec.dim(), std::vector<double>(static_cast<std::size_t>(spec.grid.cells), spec.grid.dz),
                n);
  if (spec.dim() == 2) {
    final_states<Eigen::Matrix2cd>(hd, spec, n, seed, out);
  } else {
    final_states<Matrix>(hd, spec, n, seed, out);
  }
  return out;
}

namespace {

std::function<DensityMatrix(std::uint64_t)> product_probe(const HybridSpec& spec) {
  return [spec](std::uint64_t seed) {
    std::mt19937_64 eng(splitmix64(seed));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Index rank = 1 + static_cast<Index>(eng() % static_cast<std::uint64_t>(spec.dim()));
    const DensityMatrix rho = random_density_matrix(spec.dim(), rank, seed);
    const double span = 0.25 * spec.grid.dz * double(spec.grid.cells);
    const double center = spec.grid.center(spec.grid.cells / 2) + span * (2.0 * u(eng) - 1.0);
    const double width = spec.grid.dz * (2.0 + 4.0 * u(eng));
    return DensityMatrix::unchecked(
        hybrid_product(rho, gaussian_density(spec.grid, center, width), spec.grid).block_diagonal());
  };
}

}  // namespace

DynamicalMap hybrid_meanfield_map(const HybridSpec& spec) {
  spec.validate();
  DynamicalMap m;
  m.name = "hybrid mean-field";
  m.dim = spec.dim() * spec.grid.cells;
  m.evaluate = [spec](const DensityMatrix& rho) {
    const HybridDensity hd = HybridDensity::from_block_diagonal(spec.grid, spec.dim(), rho.matrix());
    return DensityMatrix::unchecked(meanfield_hybrid_evolve(hd, spec).block_diagonal());
  };
  m.probe = product_probe(spec);
  return m;
}

DynamicalMap hybrid_measurement_map(const HybridSpec& spec) {
  spec.validate();
  DynamicalMap m;
  m.name = spec.strip_noise ? "hybrid measurement, noise-stripped drift" : "hybrid measurement";
  m.dim = spec.dim() * spec.grid.cells;
  m.kind = DynamicalMap::Kind::monte_carlo;
  m.n = spec.n;
  m.seed = spec.seed;
  m.sample = [spec](const DensityMatrix& rho, Index n, std::uint64_t seed) {
    const HybridDensity hd = HybridDensity::from_block_diagonal(spec.grid, spec.dim(), rho.matrix());
    return hybrid_final_states(hd, spec, n, seed);
  };
  m.probe = product_probe(spec);
  return m;
}

}  // namespace fwt
