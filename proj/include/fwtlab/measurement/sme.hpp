#pragma once

#include <cstdint>
#include <vector>

#include "fwtlab/core/dynamical_map.hpp"
#include "fwtlab/core/ensemble_stats.hpp"
#include "fwtlab/core/types.hpp"

namespace fwt {

/// Diffusive measurement of q at strength gamma with Markovian feedback
/// H_fb = lambda * z_prev * F.
///
/// Conventions: the averaged dynamics is
///   d rho = -i[H, rho] dt + gamma (q rho q - {q^2, rho}/2) dt,
/// the record is z = tr(q rho) + dW / (2 sqrt(gamma) dt), and the feedback
/// of step j uses the record of step j-1.
struct SmeConfig {
  double gamma = 1.0;
  Observable q = Observable::from_matrix(Matrix::Zero(2, 2));
  Observable h = Observable::from_matrix(Matrix::Zero(2, 2));
  double lambda = 0.0;
  Observable f = Observable::from_matrix(Matrix::Zero(2, 2));
  double dt = 0.01;
  Index steps = 100;
  Index n = 1000;
  std::uint64_t seed = 0;
  /// Drive the feedback with tr(q rho) instead of the noisy record.
  bool strip_noise = false;

  static constexpr double kMaxGammaDt = 0.05;

  Index dim() const { return q.dim(); }
  /// Throws InvalidInput on any violated guard.
  void validate() const;
};

struct SmeStepResult {
  DensityMatrix rho;
  double z;       ///< record sample of this step
  double mean_q;  ///< tr(q rho) before the measurement update
  bool flagged;   ///< eigenvalue below -1e-6 after the update
};

/// One step: free evolution and feedback exp(-i lambda z_prev F dt) applied
/// as exact unitaries, then the Gaussian measurement update
///   rho -> M rho M^dagger / tr,  M = exp(-(y - 2 sqrt(gamma) dt q)^2 / (4 dt)),
/// where y is drawn from its Born distribution by inverse CDF of dW.
SmeStepResult sme_step(const DensityMatrix& rho, const SmeConfig& cfg,
                       double dw, double z_prev = 0.0);

struct MeasurementRecord {
  double dt = 0.0;
  std::vector<double> z;
  std::vector<double> dw;
  std::vector<double> mean_q;
};

struct TrajectoryResult {
  std::vector<Index> checkpoint_steps;
  std::vector<DensityMatrix> checkpoints;
  MeasurementRecord record;
  DensityMatrix final_state;
  Index flagged_steps = 0;
};

/// Runs cfg.steps steps with the noise stream (cfg.seed, stream). States are
/// stored after each listed step count (0 = initial state).
TrajectoryResult run_trajectory(const DensityMatrix& rho0, const SmeConfig& cfg,
                                std::uint64_t stream,
                                const std::vector<Index>& checkpoints = {});

/// Final states of n trajectories, streams 0..n-1 under `seed`, one row
/// each. Dispatches to a fixed-size kernel for qubits.
SampleSet sme_final_states(const DensityMatrix& rho0, const SmeConfig& cfg,
                           Index n, std::uint64_t seed);

struct EnsembleAverage {
  DensityMatrix mean;
  double bootstrap_se = 0.0;
  Index n = 0;
};

EnsembleAverage ensemble_average_map(const DensityMatrix& rho0,
                                     const SmeConfig& cfg,
                                     int bootstrap_resamples = 100);

enum class LinearityVerdict { pass, fail };

struct FeedbackLinearityResult {
  MixtureLinearityStats stats;
  LinearityVerdict verdict = LinearityVerdict::fail;
};

/// Three independent ensembles at cfg.n; PASS iff deficit <= 3 x combined
/// bootstrap SE.
FeedbackLinearityResult feedback_linearity_test(const DensityMatrix& rho1,
                                                const DensityMatrix& rho2,
                                                double alpha,
                                                const SmeConfig& cfg);

/// Seed of the k-th independent ensemble derived from a base seed.
std::uint64_t ensemble_seed(std::uint64_t base, std::uint64_t k);

/// The ensemble-averaged final state as a Monte-Carlo DynamicalMap.
DynamicalMap sme_ensemble_map(const SmeConfig& cfg);

/// Feedback-free averaged master equation integrated with RK4 (substeps
/// per cfg.dt), returning the state after each listed step count.
std::vector<DensityMatrix> lindblad_reference(const DensityMatrix& rho0,
                                              const SmeConfig& cfg,
                                              const std::vector<Index>& steps,
                                              int substeps = 10);

/// Inverse CDF of the Gaussian mixture sum_k w_k N(mu_k, s^2) evaluated at
/// Phi(xi); exact tails through erfc.
double gaussian_mixture_quantile(const double* w, const double* mu, int k,
                                 double s, double xi);

}  // namespace fwt
