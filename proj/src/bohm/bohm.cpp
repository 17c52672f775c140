#include "fwtlab/bohm/bohm.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "fwtlab/core/random.hpp"

namespace fwt {

namespace {

constexpr double kNodeThreshold = 1e-12;
constexpr Index kGuardCells = 5;
constexpr double kMaxPhase = 0.1;

/// In-place complex FFT on an owned aligned buffer.
class Fft {
 public:
  explicit Fft(Index n) : n_(n) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * std::size_t(n)));
    fwd_ = fftw_plan_dft_1d(int(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(int(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(buf_); }
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }
  Index size() const { return n_; }

 private:
  Index n_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

std::vector<double> wavenumbers(const Grid1D& g) {
  std::vector<double> k(std::size_t(g.n));
  const double base = 2.0 * std::numbers::pi / (double(g.n) * g.dx);
  for (Index j = 0; j < g.n; ++j) {
    k[std::size_t(j)] = base * double(j < g.n / 2 ? j : j - g.n);
  }
  return k;
}

double max_abs_potential(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_potential(const Grid1D& g, const std::vector<double>& v, double dt) {
  if (static_cast<Index>(v.size()) != g.n) {
    throw InvalidInput("bohm: potential size does not match the grid");
  }
  if (max_abs_potential(v) * dt >= kMaxPhase) {
    throw InvalidInput("bohm: max|V| dt = " + std::to_string(max_abs_potential(v) * dt) +
                       " >= 0.1; reduce dt");
  }
}

double norm_of(const std::vector<cplx>& psi, double dx) {
  double s = 0.0;
  for (const cplx& a : psi) s += std::norm(a);
  return s * dx;
}

/// Split-operator propagator for fixed grid, mass and dt.
class Stepper {
 public:
  Stepper(const Grid1D& g, double mass, double dt) : g_(g), dt_(dt), fft_(g.n) {
    const std::vector<double> k = wavenumbers(g);
    kin_.resize(k.size());
    const double inv_n = 1.0 / double(g.n);
    for (std::size_t j = 0; j < k.size(); ++j) {
      kin_[j] = std::polar(inv_n, -k[j] * k[j] * dt / (2.0 * mass));
    }
  }

  /// exp(-iV dt/2) per node, reusable while V is fixed.
  std::vector<cplx> half_phases(const std::vector<double>& v) const {
    std::vector<cplx> ph(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) ph[j] = std::polar(1.0, -0.5 * v[j] * dt_);
    return ph;
  }

  void step(std::vector<cplx>& psi, const std::vector<cplx>& ph) {
    cplx* b = fft_.data();
    const std::size_t n = psi.size();
    for (std::size_t j = 0; j < n; ++j) b[j] = psi[j] * ph[j];
    fft_.forward();
    for (std::size_t j = 0; j < n; ++j) b[j] *= kin_[j];
    fft_.backward();
    for (std::size_t j = 0; j < n; ++j) psi[j] = b[j] * ph[j];
  }

 private:
  Grid1D g_;
  double dt_;
  Fft fft_;
  std::vector<cplx> kin_;
};

/// Velocity field, density and optionally quantum potential on the nodes.
struct Field {
  std::vector<double> v, rho, q;
  double threshold = 0.0;
};

class FieldBuilder {
 public:
  FieldBuilder(const Grid1D& g, double mass) : g_(g), mass_(mass), fft_(g.n), k_(wavenumbers(g)) {}

  void build(const std::vector<cplx>& psi, Field& f, bool with_q) {
    const std::size_t n = psi.size();
    cplx* b = fft_.data();
    std::copy(psi.begin(), psi.end(), b);
    fft_.forward();
    spec_.assign(b, b + n);
    const double inv_n = 1.0 / double(n);
    const std::size_t nyq = n / 2;
    for (std::size_t j = 0; j < n; ++j) {
      b[j] = j == nyq ? cplx(0.0) : spec_[j] * cplx(0.0, k_[j] * inv_n);
    }
    fft_.backward();
    d1_.assign(b, b + n);
    if (with_q) {
      for (std::size_t j = 0; j < n; ++j) b[j] = spec_[j] * (-k_[j] * k_[j] * inv_n);
      fft_.backward();
      d2_.assign(b, b + n);
    }
    f.v.resize(n);
    f.rho.resize(n);
    if (with_q) f.q.resize(n);
    double top = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      f.rho[j] = std::norm(psi[j]);
      top = std::max(top, f.rho[j]);
    }
    f.threshold = kNodeThreshold * top;
    for (std::size_t j = 0; j < n; ++j) {
      if (f.rho[j] < f.threshold) {
        f.v[j] = 0.0;
        if (with_q) f.q[j] = 0.0;
        continue;
      }
      const cplx l1 = d1_[j] / psi[j];
      f.v[j] = l1.imag() / mass_;
      if (with_q) {
        const cplx l2 = d2_[j] / psi[j];
        f.q[j] = -(l2.real() + l1.imag() * l1.imag()) / (2.0 * mass_);
      }
    }
  }

 private:
  Grid1D g_;
  double mass_;
  Fft fft_;
  std::vector<double> k_;
  std::vector<cplx> spec_, d1_, d2_;
};

bool in_interior(const Grid1D& g, double z) {
  return z >= g.x(kGuardCells) && z <= g.x(g.n - 1 - kGuardCells);
}

/// Four-point Lagrange weights around node k for offset w in [0, 1).
struct Stencil {
  std::size_t k0;
  double w[4];
};

Stencil stencil(const Grid1D& g, double z) {
  const double s = (z - g.x_min) / g.dx;
  const Index k = std::clamp<Index>(static_cast<Index>(std::floor(s)), 1, g.n - 3);
  const double w = s - double(k);
  return {std::size_t(k - 1),
          {-w * (w - 1) * (w - 2) / 6.0, (w + 1) * (w - 1) * (w - 2) / 2.0,
           -(w + 1) * w * (w - 2) / 2.0, (w + 1) * w * (w - 1) / 6.0}};
}

double lerp(const Grid1D& g, const std::vector<double>& values, double z) {
  const Stencil st = stencil(g, z);
  double out = 0.0;
  for (std::size_t i = 0; i < 4; ++i) out += st.w[i] * values[st.k0 + i];
  return out;
}

/// Cubic interpolation; false when any stencil node is below the node
/// threshold.
bool interpolate(const Grid1D& g, const std::vector<double>& values, const Field& f, double z,
                 double& out) {
  const Stencil st = stencil(g, z);
  out = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (f.rho[st.k0 + i] < f.threshold) return false;
    out += st.w[i] * values[st.k0 + i];
  }
  return true;
}

Index step_count(double t, double dt, const char* what) {
  if (!(dt > 0.0) || !(t >= 0.0)) throw InvalidInput("bohm: need dt > 0 and t >= 0");
  const double r = t / dt;
  const double rounded = std::round(r);
  if (std::abs(r - rounded) > 1e-9 * std::max(1.0, r)) {
    throw InvalidInput(std::string("bohm: ") + what + " must be a multiple of dt");
  }
  return static_cast<Index>(rounded);
}

std::vector<double> tilted(const Grid1D& g, const std::vector<double>& v, double strength) {
  std::vector<double> out(v);
  for (Index k = 0; k < g.n; ++k) out[std::size_t(k)] += strength * g.x(k);
  return out;
}

std::vector<double> probabilities(const std::vector<cplx>& psi, double dx) {
  std::vector<double> p(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) p[k] = std::norm(psi[k]) * dx;
  return p;
}

/// Heun step of every trajectory between the fields at t and t + dt.
/// Returns the number of frozen trajectory steps.
Index advect(const Grid1D& g, const Field& f0, const Field& f1, double dt,
             std::vector<double>& z, std::size_t first, std::size_t last) {
  Index frozen = 0;
  for (std::size_t i = first; i < last; ++i) {
    double v1 = 0.0, v2 = 0.0;
    if (!interpolate(g, f0.v, f0, z[i], v1)) {
      ++frozen;
      continue;
    }
    const double zp = z[i] + dt * v1;
    if (!in_interior(g, zp) || !interpolate(g, f1.v, f1, zp, v2)) {
      ++frozen;
      continue;
    }
    z[i] += 0.5 * dt * (v1 + v2);
    if (!in_interior(g, z[i])) {
      throw NumericalFailure("bohm: trajectory reached the grid guard margin at z = " +
                             std::to_string(z[i]) + "; enlarge the box");
    }
  }
  return frozen;
}

}  // namespace

void Grid1D::validate() const {
  if (n < 16 || (n & (n - 1)) != 0) throw InvalidInput("Grid1D: n must be a power of two >= 16");
  if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x_min)) {
    throw InvalidInput("Grid1D: dx must be positive and finite");
  }
}

WaveFunction1D::WaveFunction1D(Grid1D grid, std::vector<cplx> amplitudes, double mass)
    : grid_(grid), psi_(std::move(amplitudes)), mass_(mass) {
  grid_.validate();
  if (static_cast<Index>(psi_.size()) != grid_.n) {
    throw InvalidInput("WaveFunction1D: amplitude count does not match the grid");
  }
  if (!(mass_ > 0.0)) throw InvalidInput("WaveFunction1D: mass must be positive");
  for (const cplx& a : psi_) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      throw InvalidInput("WaveFunction1D: non-finite amplitude");
    }
  }
  if (std::abs(norm() - 1.0) > 1e-8) {
    throw InvalidInput("WaveFunction1D: norm " + std::to_string(norm()) + " != 1");
  }
}

WaveFunction1D WaveFunction1D::unchecked(Grid1D grid, std::vector<cplx> amplitudes,
                                         double mass) {
  WaveFunction1D w(grid, {}, mass, 0);
  w.psi_ = std::move(amplitudes);
  return w;
}

WaveFunction1D::WaveFunction1D(Grid1D grid, std::vector<cplx> amplitudes, double mass, int)
    : grid_(grid), psi_(std::move(amplitudes)), mass_(mass) {}

WaveFunction1D WaveFunction1D::gaussian(const Grid1D& grid, double x0, double sigma, double k0,
                                        double mass) {
  grid.validate();
  if (!(sigma > 0.0)) throw InvalidInput("gaussian: sigma must be positive");
  std::vector<cplx> a(std::size_t(grid.n));
  for (Index k = 0; k < grid.n; ++k) {
    const double x = grid.x(k);
    const double u = x - x0;
    a[std::size_t(k)] = std::polar(std::exp(-u * u / (4.0 * sigma * sigma)), k0 * x);
  }
  const double s = std::sqrt(norm_of(a, grid.dx));
  for (cplx& c : a) c /= s;
  return WaveFunction1D(grid, std::move(a), mass);
}

double WaveFunction1D::norm() const { return norm_of(psi_, grid_.dx); }

std::vector<double> WaveFunction1D::cell_probabilities() const {
  return probabilities(psi_, grid_.dx);
}

double WaveFunction1D::mean_position() const {
  double m = 0.0;
  for (Index k = 0; k < grid_.n; ++k) m += grid_.x(k) * std::norm(psi_[std::size_t(k)]);
  return m * grid_.dx / norm();
}

double WaveFunction1D::position_sd() const {
  const double mu = mean_position();
  double s = 0.0;
  for (Index k = 0; k < grid_.n; ++k) {
    const double u = grid_.x(k) - mu;
    s += u * u * std::norm(psi_[std::size_t(k)]);
  }
  return std::sqrt(s * grid_.dx / norm());
}

WaveFunction1D schrodinger_step(const WaveFunction1D& psi, const std::vector<double>& v,
                                double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidInput("schrodinger_step: dt must be >= 0");
  check_potential(psi.grid(), v, dt);
  if (dt == 0.0) return psi;
  Stepper st(psi.grid(), psi.mass(), dt);
  std::vector<cplx> a = psi.amplitudes();
  st.step(a, st.half_phases(v));
  for (const cplx& c : a) {
    if (std::isnan(c.real()) || std::isnan(c.imag())) {
      throw NumericalFailure("schrodinger_step: NaN amplitude");
    }
  }
  const double drift = std::abs(norm_of(a, psi.grid().dx) - psi.norm());
  if (drift > 1e-10) {
    throw NumericalFailure("schrodinger_step: norm drift " + std::to_string(drift));
  }
  return WaveFunction1D::unchecked(psi.grid(), std::move(a), psi.mass());
}

namespace {

double field_value(const WaveFunction1D& psi, double z, bool quantum) {
  const Grid1D& g = psi.grid();
  if (!in_interior(g, z)) throw InvalidInput("bohm: z outside the guarded grid interior");
  FieldBuilder fb(g, psi.mass());
  Field f;
  fb.build(psi.amplitudes(), f, quantum);
  double out = 0.0;
  if (!interpolate(g, quantum ? f.q : f.v, f, z, out)) {
    throw InvalidInput("bohm: z is at a node of the wave function");
  }
  return out;
}

}  // namespace

double guidance_velocity(const WaveFunction1D& psi, double z) {
  return field_value(psi, z, false);
}

double quantum_potential(const WaveFunction1D& psi, double z) {
  return field_value(psi, z, true);
}

std::vector<double> sample_initial_positions(const WaveFunction1D& psi, Index count,
                                             std::uint64_t seed) {
  if (count < 0) throw InvalidInput("sample_initial_positions: negative count");
  const Grid1D& g = psi.grid();
  const std::vector<double> p = psi.cell_probabilities();
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  const double total = cdf.back();
  Rng rng = make_stream(seed, 0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (double& z : out) {
    const double u = u01(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    while (p[std::size_t(it - cdf.begin())] <= 0.0 && it != cdf.begin()) --it;
    const auto k = std::size_t(it - cdf.begin());
    const double below = k == 0 ? 0.0 : cdf[k - 1];
    const double frac = std::clamp((u - below) / p[k], 0.0, 1.0);
    z = g.x(Index(k)) - 0.5 * g.dx + frac * g.dx;
  }
  return out;
}

double ks_distance(std::vector<double> samples, const Grid1D& grid,
                   const std::vector<double>& cell_probabilities) {
  if (samples.empty()) throw InvalidInput("ks_distance: no samples");
  if (static_cast<Index>(cell_probabilities.size()) != grid.n) {
    throw InvalidInput("ks_distance: density does not match the grid");
  }
  std::sort(samples.begin(), samples.end());
  std::vector<double> cdf(cell_probabilities.size());
  std::partial_sum(cell_probabilities.begin(), cell_probabilities.end(), cdf.begin());
  const double total = cdf.back();
  const double lo = grid.x_min - 0.5 * grid.dx;
  auto model = [&](double x) {
    const double s = (x - lo) / grid.dx;
    if (s <= 0.0) return 0.0;
    if (s >= double(grid.n)) return 1.0;
    const auto k = std::size_t(std::floor(s));
    const double below = k == 0 ? 0.0 : cdf[k - 1];
    return (below + (s - double(k)) * cell_probabilities[k]) / total;
  };
  const double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = model(samples[i]);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  return d;
}

double ks_critical_5pct(Index n) {
  if (n < 1) throw InvalidInput("ks_critical_5pct: n must be >= 1");
  return 1.358 / std::sqrt(double(n));
}

double free_gaussian_width(double sigma0, double t, double mass) {
  const double r = t / (2.0 * mass * sigma0 * sigma0);
  return sigma0 * std::sqrt(1.0 + r * r);
}

void DelayedControlSpec::validate(double t_final, double dt) const {
  if (!std::isfinite(lambda)) throw InvalidInput("DelayedControlSpec: lambda must be finite");
  if (mode == Mode::instantaneous) {
    if (tau != 0.0) throw InvalidInput("DelayedControlSpec: instantaneous control needs tau = 0");
    return;
  }
  if (!(tau > 0.0) || tau > t_final) {
    throw InvalidInput("DelayedControlSpec: delayed control needs 0 < tau <= T");
  }
  step_count(tau, dt, "tau");
}

BohmEnsembleResult run_controlled_ensemble(const WaveFunction1D& psi0,
                                           const std::vector<double>& v, Index n_traj,
                                           const DelayedControlSpec& spec, double t_final,
                                           double dt, std::uint64_t seed,
                                           const std::vector<Index>& checkpoints) {
  const Grid1D& g = psi0.grid();
  const Index steps = step_count(t_final, dt, "T");
  spec.validate(t_final, dt);
  if (n_traj < 1) throw InvalidInput("run_controlled_ensemble: n_traj must be >= 1");
  for (Index c : checkpoints) {
    if (c < 0 || c > steps) throw InvalidInput("run_controlled_ensemble: checkpoint out of range");
  }
  const bool delayed = spec.mode == DelayedControlSpec::Mode::delayed;
  std::vector<double> shared_v = v;
  if (!delayed) {
    for (Index k = 0; k < g.n; ++k) shared_v[std::size_t(k)] += spec.lambda * g.x(k) * g.x(k);
  }
  check_potential(g, shared_v, dt);
  const Index shared_steps = delayed ? steps - step_count(spec.tau, dt, "tau") : steps;
  for (Index c : checkpoints) {
    if (c > shared_steps) {
      throw InvalidInput("run_controlled_ensemble: delayed-mode checkpoints must precede T - tau");
    }
  }

  BohmEnsembleResult out{{}, {}, psi0, checkpoints, {}, {}, 0, 0, false, true};
  std::vector<double> z = sample_initial_positions(psi0, n_traj, seed);
  for (double x : z) {
    if (!in_interior(g, x)) throw NumericalFailure("bohm: initial position in the guard margin");
  }
  out.initial_positions = z;
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });

  Stepper st(g, psi0.mass(), dt);
  const std::vector<cplx> shared_ph = st.half_phases(shared_v);
  FieldBuilder fb(g, psi0.mass());
  std::vector<cplx> psi = psi0.amplitudes();
  Field f0, f1;
  fb.build(psi, f0, false);
  auto keep = [&](Index j) {
    for (Index c : checkpoints) {
      if (c == j) {
        out.checkpoint_positions.push_back(z);
        out.checkpoint_probabilities.push_back(probabilities(psi, g.dx));
      }
    }
  };
  keep(0);
  for (Index j = 0; j < shared_steps; ++j) {
    st.step(psi, shared_ph);
    fb.build(psi, f1, false);
    out.frozen_steps += advect(g, f0, f1, dt, z, 0, z.size());
    out.trajectory_steps += n_traj;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      if (z[order[i]] > z[order[i + 1]]) out.order_preserved = false;
    }
    std::swap(f0, f1);
    keep(j + 1);
  }
  out.final_wave = WaveFunction1D::unchecked(g, psi, psi0.mass());

  if (delayed) {
    // each trajectory now carries its own wave, tilted by its own z(t')
    const Index private_steps = steps - shared_steps;
    std::vector<cplx> own;
    Field p0, p1;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const std::vector<double> vi = tilted(g, v, spec.lambda * z[i]);
      check_potential(g, vi, dt);
      const std::vector<cplx> ph = st.half_phases(vi);
      own = psi;
      p0 = f0;
      for (Index j = 0; j < private_steps; ++j) {
        st.step(own, ph);
        fb.build(own, p1, false);
        out.frozen_steps += advect(g, p0, p1, dt, z, i, i + 1);
        std::swap(p0, p1);
      }
      out.trajectory_steps += private_steps;
    }
    std::vector<cplx> uncontrolled = psi;
    const std::vector<cplx> ph = st.half_phases(v);
    for (Index j = shared_steps; j < steps; ++j) st.step(uncontrolled, ph);
    out.final_wave = WaveFunction1D::unchecked(g, uncontrolled, psi0.mass());
  }
  out.final_positions = z;
  out.unreliable = double(out.frozen_steps) > 0.01 * double(out.trajectory_steps);
  if (std::abs(out.final_wave.norm() - 1.0) > 1e-7) {
    throw NumericalFailure("bohm: guiding wave norm drifted by " +
                           std::to_string(std::abs(out.final_wave.norm() - 1.0)));
  }
  return out;
}

std::vector<double> orthodox_prediction(const WaveFunction1D& psi0,
                                        const std::vector<double>& v,
                                        const DelayedControlSpec& spec, double t_final,
                                        double dt, Index bin_cells) {
  const Grid1D& g = psi0.grid();
  const Index steps = step_count(t_final, dt, "T");
  if (spec.mode != DelayedControlSpec::Mode::delayed) {
    throw InvalidInput("orthodox_prediction: needs a delayed control spec");
  }
  spec.validate(t_final, dt);
  if (bin_cells < 1) throw InvalidInput("orthodox_prediction: bin_cells must be >= 1");
  check_potential(g, v, dt);
  const Index hold = step_count(spec.tau, dt, "tau");
  Stepper st(g, psi0.mass(), dt);
  std::vector<cplx> psi = psi0.amplitudes();
  const std::vector<cplx> ph = st.half_phases(v);
  for (Index j = 0; j < steps - hold; ++j) st.step(psi, ph);

  std::vector<double> out(std::size_t(g.n), 0.0);
  std::vector<cplx> branch(psi.size());
  std::map<int, std::unique_ptr<Stepper>> substeppers;
  for (Index first = 0; first < g.n; first += bin_cells) {
    const Index last = std::min(g.n, first + bin_cells);
    double pb = 0.0;
    for (Index k = first; k < last; ++k) pb += std::norm(psi[std::size_t(k)]) * g.dx;
    if (pb < 1e-14) continue;
    std::fill(branch.begin(), branch.end(), cplx(0.0));
    const double s = 1.0 / std::sqrt(pb);
    for (Index k = first; k < last; ++k) branch[std::size_t(k)] = psi[std::size_t(k)] * s;
    const double zb = 0.5 * (g.x(first) + g.x(last - 1));
    const std::vector<double> vb = tilted(g, v, spec.lambda * zb);
    // far-tail branches carry strong tilts; substep them to keep the guard
    const int sub = std::max(1, int(std::ceil(max_abs_potential(vb) * dt / (0.5 * kMaxPhase))));
    auto it = substeppers.find(sub);
    if (it == substeppers.end()) {
      it = substeppers.emplace(sub, std::make_unique<Stepper>(g, psi0.mass(), dt / sub)).first;
    }
    const std::vector<cplx> phb = it->second->half_phases(vb);
    for (Index j = 0; j < hold * sub; ++j) it->second->step(branch, phb);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += pb * std::norm(branch[k]) * g.dx;
  }
  return out;
}

NewtonResidual newton_residual(const WaveFunction1D& psi0, const std::vector<double>& v,
                               Index n_traj, double t_final, double dt, std::uint64_t seed) {
  const Grid1D& g = psi0.grid();
  const Index steps = step_count(t_final, dt, "T");
  if (steps < 2 || n_traj < 1) throw InvalidInput("newton_residual: need >= 2 steps and trajectories");
  check_potential(g, v, dt);
  const double m = psi0.mass();
  std::vector<double> z = sample_initial_positions(psi0, n_traj, seed);
  const std::size_t n = z.size();
  Stepper st(g, m, dt);
  FieldBuilder fb(g, m);
  std::vector<cplx> psi = psi0.amplitudes();
  const std::vector<cplx> ph = st.half_phases(v);
  Field f0, f1;
  fb.build(psi, f0, true);

  // force(z) = V'(z) + V_rho'(z) by a central difference of width 2 dx
  auto force = [&](const Field& f, double x, double& out) {
    double qp = 0.0, qm = 0.0;
    if (!interpolate(g, f.q, f, x + g.dx, qp) || !interpolate(g, f.q, f, x - g.dx, qm)) return false;
    out = (qp - qm + lerp(g, v, x + g.dx) - lerp(g, v, x - g.dx)) / (2.0 * g.dx);
    return true;
  };

  std::vector<double> prev(n), forces(n);
  std::vector<char> valid(n);
  NewtonResidual r;
  double sum2 = 0.0;
  for (Index j = 0; j < steps; ++j) {
    std::vector<double> before = z;
    for (std::size_t i = 0; i < n; ++i) valid[i] = force(f0, z[i], forces[i]);
    st.step(psi, ph);
    fb.build(psi, f1, true);
    advect(g, f0, f1, dt, z, 0, n);
    if (j > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!valid[i]) continue;
        const double acc = m * (z[i] - 2.0 * before[i] + prev[i]) / (dt * dt);
        const double res = acc + forces[i];
        sum2 += res * res;
        r.max_abs = std::max(r.max_abs, std::abs(res));
        ++r.samples;
      }
    }
    prev = std::move(before);
    std::swap(f0, f1);
  }
  if (r.samples == 0) throw NumericalFailure("newton_residual: no valid samples");
  r.rms = std::sqrt(sum2 / double(r.samples));
  return r;
}

}  // namespace fwt
