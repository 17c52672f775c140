#pragma once

#include <cstdint>
#include <vector>

#include "fwtlab/core/dynamical_map.hpp"
#include "fwtlab/core/ensemble_stats.hpp"
#include "fwtlab/core/types.hpp"

namespace fwt {

/// Uniform 1-D lattice of `cells` cells of width dz starting at z_min; cell
/// i is centred at z_min + (i + 1/2) dz.
struct HybridGrid {
  double z_min = -4.0;
  double dz = 0.125;
  Index cells = 64;

  double center(Index i) const { return z_min + (double(i) + 0.5) * dz; }
  /// Cell containing z, clamped to the grid.
  Index cell_of(double z) const;
  void validate() const;
};

/// z -> unnormalized density matrix rho(z) with sum_z tr rho(z) dz = 1.
///
/// Equivalently the block-diagonal density matrix (+)_z rho(z) dz, whose
/// trace norm is the hybrid norm sum_z dz ||rho(z)||_tr.
class HybridDensity {
 public:
  HybridDensity(HybridGrid grid, std::vector<Matrix> cells);

  const HybridGrid& grid() const { return grid_; }
  Index dim() const { return cells_.front().rows(); }
  const std::vector<Matrix>& cells() const { return cells_; }
  const Matrix& cell(Index i) const { return cells_[static_cast<std::size_t>(i)]; }

  double total_trace() const;
  /// tr rho(z) per cell.
  RealVector classical_marginal() const;
  /// sum_z dz rho(z)
  Matrix quantum_marginal() const;

  Matrix block_diagonal() const;
  static HybridDensity from_block_diagonal(const HybridGrid& grid, Index dim,
                                           const Matrix& m);

 private:
  HybridGrid grid_;
  std::vector<Matrix> cells_;
};

/// Hybrid trace-norm distance sum_z dz ||a(z) - b(z)||_tr.
double hybrid_distance(const HybridDensity& a, const HybridDensity& b);

/// rho(z) = rho * rho_c(z); rho_c >= 0 with sum rho_c dz = 1.
HybridDensity hybrid_product(const DensityMatrix& rho, const RealVector& rho_c,
                             const HybridGrid& grid);

/// Classical densities on the grid.
RealVector point_mass(const HybridGrid& grid, double z0);
RealVector gaussian_density(const HybridGrid& grid, double center, double width);

/// Toy hybrid dynamics. The quantum part of cell z evolves under
/// H + kappa z F. In mean-field mode the label drifts with
/// drift * tr(F rho(z)) / tr rho(z); in measurement mode q is measured
/// continuously (one shared record per realization) and the label drifts
/// with lambda times the record, or lambda tr(q rho) when strip_noise is set.
struct HybridSpec {
  enum class Mode { mean_field, measurement };

  Mode mode = Mode::mean_field;
  HybridGrid grid;
  Observable h = Observable::from_matrix(Matrix::Zero(2, 2));
  Observable f = Observable::from_matrix(Matrix::Zero(2, 2));
  double kappa = 0.0;
  double drift = 0.0;

  Observable q = Observable::from_matrix(Matrix::Zero(2, 2));
  double gamma = 1.0;
  double lambda = 0.0;
  bool strip_noise = false;

  double dt = 0.01;
  Index steps = 100;
  Index n = 1000;
  std::uint64_t seed = 0;

  Index dim() const { return h.dim(); }
  void validate() const;
};

/// One step of the mean-field coupling; throws InvalidInput on a CFL
/// violation |v| dt > dz.
HybridDensity meanfield_hybrid_step(const HybridDensity& hd,
                                    const HybridSpec& spec, double dt);

struct HybridStepResult {
  HybridDensity state;
  double z;       ///< record of this step
  double mean_q;  ///< tr(q rho) before the update, hybrid-averaged
};

/// One measurement-driven step with injected noise dW ~ N(0, dt).
HybridStepResult measurement_hybrid_step(const HybridDensity& hd,
                                         const HybridSpec& spec, double dw);

/// spec.steps mean-field steps.
HybridDensity meanfield_hybrid_evolve(const HybridDensity& hd,
                                      const HybridSpec& spec);

/// Final hybrid states of n measurement-driven realizations; one row per
/// realization, one block per cell weighted by dz.
SampleSet hybrid_final_states(const HybridDensity& hd, const HybridSpec& spec,
                              Index n, std::uint64_t seed);

/// Mean-field evolution as an exact map on block-diagonal hybrid matrices.
DynamicalMap hybrid_meanfield_map(const HybridSpec& spec);
/// Measurement-driven evolution as a Monte-Carlo map on block-diagonal
/// hybrid matrices.
DynamicalMap hybrid_measurement_map(const HybridSpec& spec);

}  // namespace fwt
