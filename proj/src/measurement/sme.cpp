#include "fwtlab/measurement/sme.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fwtlab/core/random.hpp"
#include "sme_kernel.hpp"

namespace fwt {

namespace {

double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

void check_flags(Index flagged, Index steps) {
  if (double(flagged) > 1e-3 * double(steps)) {
    throw NumericalFailure("sme: " + std::to_string(flagged) + " of " +
                           std::to_string(steps) +
                           " steps lost positivity beyond -1e-6");
  }
}

template <class M>
void final_states(const DensityMatrix& rho0, const SmeConfig& cfg, Index n,
                  std::uint64_t seed, SampleSet& out) {
  const detail::SmeKernel<M> kernel(cfg);
  const M start = kernel.to_q_basis(rho0.matrix());
  const Index d = kernel.dim();
  for (Index t = 0; t < n; ++t) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> n01(0.0, 1.0);
    M rho = start;
    double signal = 0.0, z = 0.0, mean_q = 0.0;
    Index flagged = 0;
    for (Index j = 0; j < cfg.steps; ++j) {
      if (kernel.step(rho, signal, n01(rng), z, mean_q)) ++flagged;
      signal = kernel.signal(z, mean_q);
    }
    check_flags(flagged, cfg.steps);
    const Matrix back = kernel.from_q_basis(rho);
    out.data().row(t) = Eigen::Map<const RowVector>(back.data(), d * d);
  }
}

}  // namespace

void SmeConfig::validate() const {
  const Index d = q.dim();
  if (d < 2 || h.dim() != d || f.dim() != d) {
    throw InvalidInput("sme: q, H and F must share a dimension >= 2");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("sme: dt must be > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidInput("sme: gamma must be >= 0");
  }
  if (gamma * dt > kMaxGammaDt) {
    throw InvalidInput("sme: gamma * dt = " + std::to_string(gamma * dt) +
                       " exceeds 0.05; reduce dt");
  }
  if (!std::isfinite(lambda)) throw InvalidInput("sme: lambda must be finite");
  if (steps < 1) throw InvalidInput("sme: steps must be >= 1");
  if (n < 1) throw InvalidInput("sme: n must be >= 1");
}

double gaussian_mixture_quantile(const double* w, const double* mu, int k,
                                 double s, double xi) {
  double lo = mu[0], hi = mu[0], y = 0.0;
  for (int i = 0; i < k; ++i) {
    lo = std::min(lo, mu[i]);
    hi = std::max(hi, mu[i]);
    y += w[i] * mu[i];
  }
  lo += s * xi;
  hi += s * xi;
  y += s * xi;
  if (!(hi > lo)) return lo;
  // solve in the tail that keeps precision: lower CDF for xi <= 0, upper
  // tail otherwise; h(y) is increasing either way
  const bool upper = xi > 0.0;
  const double target = upper ? upper_tail(xi) : upper_tail(-xi);
  const double inv_s = 1.0 / s;
  const double norm = inv_s / std::sqrt(2.0 * std::numbers::pi);
  for (int it = 0; it < 100; ++it) {
    double g = 0.0, dg = 0.0;
    for (int i = 0; i < k; ++i) {
      const double x = (y - mu[i]) * inv_s;
      g += w[i] * (upper ? upper_tail(x) : upper_tail(-x));
      dg += w[i] * std::exp(-0.5 * x * x) * norm;
    }
    const double h = upper ? target - g : g - target;
    if (h == 0.0) return y;
    const double newton = dg > 0.0 ? h / dg : INFINITY;
    if (std::abs(newton) <= 1e-14 * s) return y - newton;
    if (h > 0.0) {
      hi = y;
    } else {
      lo = y;
    }
    double next = y - newton;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-14 * s) return next;
    y = next;
  }
  return y;
}

SmeStepResult sme_step(const DensityMatrix& rho, const SmeConfig& cfg,
                       double dw, double z_prev) {
  cfg.validate();
  if (rho.dim() != cfg.dim()) throw InvalidInput("sme_step: dimension mismatch");
  if (!std::isfinite(dw) || !std::isfinite(z_prev)) {
    throw InvalidInput("sme_step: non-finite noise or record");
  }
  const detail::SmeKernel<Matrix> kernel(cfg);
  Matrix r = kernel.to_q_basis(rho.matrix());
  double z = 0.0, mean_q = 0.0;
  const bool flagged = kernel.step(r, z_prev, dw / std::sqrt(cfg.dt), z, mean_q);
  return {DensityMatrix::unchecked(kernel.from_q_basis(r)), z, mean_q, flagged};
}

TrajectoryResult run_trajectory(const DensityMatrix& rho0, const SmeConfig& cfg,
                                std::uint64_t stream,
                                const std::vector<Index>& checkpoints) {
  cfg.validate();
  if (rho0.dim() != cfg.dim()) throw InvalidInput("run_trajectory: dimension mismatch");
  for (Index c : checkpoints) {
    if (c < 0 || c > cfg.steps) throw InvalidInput("run_trajectory: checkpoint out of range");
  }
  const detail::SmeKernel<Matrix> kernel(cfg);
  TrajectoryResult out{checkpoints, {}, {}, rho0, 0};
  out.record.dt = cfg.dt;
  Rng rng = make_stream(cfg.seed, stream);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double sdt = std::sqrt(cfg.dt);

  Matrix rho = kernel.to_q_basis(rho0.matrix());
  auto keep = [&](Index j) {
    for (Index c : checkpoints) {
      if (c == j) out.checkpoints.push_back(DensityMatrix::unchecked(kernel.from_q_basis(rho)));
    }
  };
  keep(0);
  double signal = 0.0, z = 0.0, mean_q = 0.0;
  for (Index j = 0; j < cfg.steps; ++j) {
    const double xi = n01(rng);
    if (kernel.step(rho, signal, xi, z, mean_q)) ++out.flagged_steps;
    signal = kernel.signal(z, mean_q);
    out.record.z.push_back(z);
    out.record.dw.push_back(sdt * xi);
    out.record.mean_q.push_back(mean_q);
    keep(j + 1);
  }
  check_flags(out.flagged_steps, cfg.steps);
  out.final_state = DensityMatrix::unchecked(kernel.from_q_basis(rho));
  return out;
}

SampleSet sme_final_states(const DensityMatrix& rho0, const SmeConfig& cfg,
                           Index n, std::uint64_t seed) {
  cfg.validate();
  if (rho0.dim() != cfg.dim()) throw InvalidInput("sme: dimension mismatch");
  if (n < 1) throw InvalidInput("sme: need at least one trajectory");
  SampleSet out(cfg.dim(), {1.0}, n);
  if (cfg.dim() == 2) {
    final_states<Eigen::Matrix2cd>(rho0, cfg, n, seed, out);
  } else {
    final_states<Matrix>(rho0, cfg, n, seed, out);
  }
  return out;
}

EnsembleAverage ensemble_average_map(const DensityMatrix& rho0,
                                     const SmeConfig& cfg,
                                     int bootstrap_resamples) {
  const SampleSet s = sme_final_states(rho0, cfg, cfg.n, cfg.seed);
  const Matrix mean = s.block(s.mean(), 0);
  EnsembleAverage out{DensityMatrix::unchecked(mean), 0.0, cfg.n};
  if (cfg.n > 1) {
    out.bootstrap_se = bootstrap_standard_error(s, bootstrap_resamples, cfg.seed);
  }
  return out;
}

std::uint64_t ensemble_seed(std::uint64_t base, std::uint64_t k) {
  return splitmix64(base ^ (0x5EED0000ull + k));
}

FeedbackLinearityResult feedback_linearity_test(const DensityMatrix& rho1,
                                                const DensityMatrix& rho2,
                                                double alpha,
                                                const SmeConfig& cfg) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("feedback_linearity_test: alpha outside [0,1]");
  }
  const DensityMatrix mix = DensityMatrix::mixture(alpha, rho1, rho2);
  const SampleSet a = sme_final_states(mix, cfg, cfg.n, ensemble_seed(cfg.seed, 0));
  const SampleSet b = sme_final_states(rho1, cfg, cfg.n, ensemble_seed(cfg.seed, 1));
  const SampleSet c = sme_final_states(rho2, cfg, cfg.n, ensemble_seed(cfg.seed, 2));
  MixtureLinearityOptions opts;
  opts.bootstrap_seed = cfg.seed;
  FeedbackLinearityResult r;
  r.stats = mixture_linearity(a, b, c, alpha, opts);
  r.verdict = r.stats.deficit <= r.stats.bound ? LinearityVerdict::pass
                                               : LinearityVerdict::fail;
  return r;
}

DynamicalMap sme_ensemble_map(const SmeConfig& cfg) {
  cfg.validate();
  DynamicalMap m;
  m.name = cfg.strip_noise ? "continuous measurement, noise-stripped feedback"
                           : "continuous measurement, record feedback";
  m.dim = cfg.dim();
  m.kind = DynamicalMap::Kind::monte_carlo;
  m.n = cfg.n;
  m.seed = cfg.seed;
  m.sample = [cfg](const DensityMatrix& rho, Index n, std::uint64_t seed) {
    return sme_final_states(rho, cfg, n, seed);
  };
  return m;
}

std::vector<DensityMatrix> lindblad_reference(const DensityMatrix& rho0,
                                              const SmeConfig& cfg,
                                              const std::vector<Index>& steps,
                                              int substeps) {
  cfg.validate();
  if (rho0.dim() != cfg.dim()) throw InvalidInput("lindblad_reference: dimension mismatch");
  if (substeps < 1) throw InvalidInput("lindblad_reference: substeps < 1");
  const cplx mi(0.0, -1.0);
  const Matrix& h = cfg.h.matrix();
  const Matrix& q = cfg.q.matrix();
  const Matrix q2 = q * q;
  const double g = cfg.gamma;
  auto rhs = [&](const Matrix& r) -> Matrix {
    return mi * (h * r - r * h) + g * (q * r * q - 0.5 * (q2 * r + r * q2));
  };
  const double step = cfg.dt / substeps;
  Index last = 0;
  for (Index s : steps) {
    if (s < 0) throw InvalidInput("lindblad_reference: negative step");
    last = std::max(last, s);
  }
  std::vector<DensityMatrix> out(steps.size(), rho0);
  Matrix r = rho0.matrix();
  for (Index j = 0; j <= last; ++j) {
    for (std::size_t k = 0; k < steps.size(); ++k) {
      if (steps[k] == j) out[k] = DensityMatrix::unchecked(r);
    }
    if (j == last) break;
    for (int sub = 0; sub < substeps; ++sub) {
      const Matrix k1 = rhs(r);
      const Matrix k2 = rhs(r + 0.5 * step * k1);
      const Matrix k3 = rhs(r + 0.5 * step * k2);
      const Matrix k4 = rhs(r + step * k3);
      r += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return out;
}

}  // namespace fwt
