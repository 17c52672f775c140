#pragma once

#include "fwtlab/assignments/assignments.hpp"

namespace fwt {

/// Coherent states on a rectangular (q, p) lattice in a Fock space truncated
/// to `cutoff` levels, alpha = (q + i p) / sqrt2.
///
/// frame() holds the truncated analytic amplitudes
/// e^{-|a|^2/2} a^n / sqrt(n!), n < cutoff, without renormalization; the
/// frame operator cell_measure() * F F^dagger is then the identity up to grid
/// truncation. states() holds the same columns normalized to unit length,
/// used as post-measurement states.
class CoherentBasis {
 public:
  /// Lattice nodes q = -q_extent, -q_extent + dq, ..., q_extent (same in p).
  CoherentBasis(Index cutoff, double q_extent, double p_extent, double dq,
                double dp);

  static Vector amplitudes(Index cutoff, double q, double p);

  Index cutoff() const { return cutoff_; }
  Index points() const { return frame_.cols(); }
  double q(Index k) const { return q_[static_cast<std::size_t>(k)]; }
  double p(Index k) const { return p_[static_cast<std::size_t>(k)]; }
  ClassicalValue point(Index k) const { return ClassicalValue::pair(q(k), p(k)); }
  /// dq dp / (2 pi)
  double cell_measure() const { return cell_; }

  const Matrix& frame() const { return frame_; }
  const Matrix& states() const { return states_; }

  /// Lattice points with q^2 + p^2 > cutoff / 4, where the truncated vector
  /// is no longer normalized to 1e-8.
  Index points_outside_guard() const { return outside_; }
  /// max |cell * F F^dagger - 1|
  double frame_deficit() const;

 private:
  Index cutoff_;
  double cell_;
  std::vector<double> q_, p_;
  Matrix frame_;
  Matrix states_;
  Index outside_ = 0;
};

inline constexpr double kTopLevelMass = 1e-6;
inline constexpr double kMinRawWeight = 0.99;

/// Husimi POVM outcomes with weights cell * <z|rho|z>, renormalized by their
/// raw sum (reported). Throws when the top Fock level carries more than
/// kTopLevelMass or the raw sum is below kMinRawWeight.
OutcomeEnsemble husimi_assign(const DensityMatrix& rho,
                              const CoherentBasis& basis);

/// rho -> sum_z w_z U_z |z><z| U_z^dagger with precomputed controlled
/// post-states.
class HusimiChannel {
 public:
  HusimiChannel(const CoherentBasis& basis, const ControlPolicy& ctrl);

  Index dim() const { return frame_.rows(); }
  /// Measure-and-prepare Kraus form cell * sum_z V_z <z|x|z> V_z^dagger,
  /// exactly linear on any operator.
  Matrix apply_raw(const Matrix& x) const;
  /// Guarded map normalized by the raw weight sum.
  DensityMatrix apply(const DensityMatrix& rho) const;
  /// cell * <z|rho|z> for every lattice point.
  RealVector raw_weights(const Matrix& x) const;

 private:
  Matrix frame_;
  Matrix post_;
  double cell_;
};

DensityMatrix husimi_controlled_average_map(const DensityMatrix& rho,
                                            const CoherentBasis& basis,
                                            const ControlPolicy& ctrl);

}  // namespace fwt
