#pragma once

#include <cstdint>
#include <vector>

#include "fwtlab/core/types.hpp"

namespace fwt {

/// n uniformly spaced points x_k = x_min + k dx; n a power of two. The box
/// is periodic with period n dx.
struct Grid1D {
  double x_min = -10.24;
  double dx = 0.04;
  Index n = 512;

  double x(Index k) const { return x_min + double(k) * dx; }
  double x_max() const { return x(n - 1); }
  void validate() const;
};

/// Pure state on a 1-D grid with hbar = 1; sum |psi_k|^2 dx = 1.
class WaveFunction1D {
 public:
  WaveFunction1D(Grid1D grid, std::vector<cplx> amplitudes, double mass = 1.0);

  /// (2 pi sigma^2)^(-1/4) exp(-(x-x0)^2 / (4 sigma^2) + i k0 x), so that
  /// |psi|^2 has standard deviation sigma. Renormalized on the grid.
  static WaveFunction1D gaussian(const Grid1D& grid, double x0, double sigma,
                                 double k0 = 0.0, double mass = 1.0);

  const Grid1D& grid() const { return grid_; }
  const std::vector<cplx>& amplitudes() const { return psi_; }
  double mass() const { return mass_; }

  double norm() const;
  /// |psi_k|^2 dx per cell.
  std::vector<double> cell_probabilities() const;
  double mean_position() const;
  double position_sd() const;

  /// Builds without the norm check; for internal stepping.
  static WaveFunction1D unchecked(Grid1D grid, std::vector<cplx> amplitudes, double mass);

 private:
  WaveFunction1D(Grid1D grid, std::vector<cplx> amplitudes, double mass, int);

  Grid1D grid_;
  std::vector<cplx> psi_;
  double mass_;
};

/// One Strang step exp(-iV dt/2) exp(-i k^2 dt / 2m) exp(-iV dt/2).
/// Throws InvalidInput when max|V| dt >= 0.1 and NumericalFailure on NaN or a
/// norm drift above 1e-10.
WaveFunction1D schrodinger_step(const WaveFunction1D& psi, const std::vector<double>& v,
                                double dt);

/// Velocity (1/m) Im(psi'/psi) at z; spectral derivative, linear
/// interpolation. Throws InvalidInput at a node (|psi|^2 below the node
/// threshold) or outside the guarded interior.
double guidance_velocity(const WaveFunction1D& psi, double z);

/// Quantum potential -(1/2m) R''/R at z with R = |psi|.
double quantum_potential(const WaveFunction1D& psi, double z);

/// i.i.d. draws from |psi|^2 by inverse CDF, uniform within each cell.
std::vector<double> sample_initial_positions(const WaveFunction1D& psi, Index count,
                                             std::uint64_t seed);

/// Kolmogorov-Smirnov distance between samples and a grid density (mass
/// p_k spread uniformly over cell k).
double ks_distance(std::vector<double> samples, const Grid1D& grid,
                   const std::vector<double>& cell_probabilities);
/// Asymptotic 5% critical value 1.358 / sqrt(n).
double ks_critical_5pct(Index n);

/// sigma0 sqrt(1 + (t / (2 m sigma0^2))^2)
double free_gaussian_width(double sigma0, double t, double mass = 1.0);

/// Control potential lambda * z * x. Instantaneous mode uses the current
/// position as z, which makes the control the shared potential lambda x^2.
/// Delayed mode reads z_i at t' = T - tau and applies lambda z_i(t') x to a
/// private copy of the guiding wave over (t', T].
struct DelayedControlSpec {
  enum class Mode { instantaneous, delayed };

  Mode mode = Mode::instantaneous;
  double tau = 0.0;
  double lambda = 0.0;

  void validate(double t_final, double dt) const;
};

struct BohmEnsembleResult {
  std::vector<double> initial_positions;
  std::vector<double> final_positions;
  /// Shared guiding wave at T (the uncontrolled wave in delayed mode).
  WaveFunction1D final_wave;
  /// Positions and |psi|^2 per cell at each requested checkpoint step.
  std::vector<Index> checkpoint_steps;
  std::vector<std::vector<double>> checkpoint_positions;
  std::vector<std::vector<double>> checkpoint_probabilities;
  Index frozen_steps = 0;
  Index trajectory_steps = 0;
  bool unreliable = false;    ///< frozen steps above 1% of trajectory steps
  bool order_preserved = true;  ///< single-wave runs only
};

/// Trajectory ensemble guided by psi0 under the static potential v plus the
/// configured control. Heun integration of the first-order guidance law.
BohmEnsembleResult run_controlled_ensemble(const WaveFunction1D& psi0,
                                           const std::vector<double>& v, Index n_traj,
                                           const DelayedControlSpec& spec, double t_final,
                                           double dt, std::uint64_t seed,
                                           const std::vector<Index>& checkpoints = {});

/// Standard quantum prediction for the delayed experiment: position measured
/// at T - tau in bins of `bin_cells` cells, each branch evolved with
/// lambda * (bin centre) * x for tau, weighted sum of |psi_b(T)|^2.
std::vector<double> orthodox_prediction(const WaveFunction1D& psi0,
                                        const std::vector<double>& v,
                                        const DelayedControlSpec& spec, double t_final,
                                        double dt, Index bin_cells = 10);

struct NewtonResidual {
  double rms = 0.0;
  double max_abs = 0.0;
  Index samples = 0;
};

/// m z'' + V'(z) + V_rho'(z) along single-wave trajectories, with z'' from
/// second differences of the stored positions.
NewtonResidual newton_residual(const WaveFunction1D& psi0, const std::vector<double>& v,
                               Index n_traj, double t_final, double dt, std::uint64_t seed);

}  // namespace fwt
