#pragma once

#include <functional>
#include <vector>

#include "fwtlab/core/dynamical_map.hpp"
#include "fwtlab/core/types.hpp"

namespace fwt {

using HistoryLabels = std::vector<int>;

/// Projector sets at strictly increasing times t_1 < ... < t_n with free
/// evolution exp(-iHt) in between (and from t = 0 to t_1).
class HistorySpec {
 public:
  static constexpr std::size_t kMaxTimes = 6;
  static constexpr std::size_t kMaxHistories = 64;

  HistorySpec(std::vector<double> times, std::vector<ProjectorSet> sets,
              Observable h);

  std::size_t length() const { return times_.size(); }
  Index dim() const { return h_.dim(); }
  const std::vector<double>& times() const { return times_; }
  const ProjectorSet& set(std::size_t j) const { return sets_[j]; }
  const Observable& hamiltonian() const { return h_; }

  /// Every label tuple, lexicographic in the projector order of each set.
  std::vector<HistoryLabels> histories() const;

 private:
  std::vector<double> times_;
  std::vector<ProjectorSet> sets_;
  Observable h_;
};

struct ClassOperator {
  HistoryLabels labels;
  Matrix matrix;
};

/// C_z = P_{z_n} U(t_n - t_{n-1}) ... P_{z_1} U(t_1).
ClassOperator class_operator(const HistorySpec& spec,
                             const HistoryLabels& labels);
std::vector<ClassOperator> class_operators(const HistorySpec& spec);

/// D[z][u] = tr(C_z^dagger C_u rho), rows and columns in histories() order.
struct DecoherenceFunctional {
  std::vector<HistoryLabels> labels;
  Matrix d;

  RealVector probabilities() const { return d.diagonal().real(); }
};

DecoherenceFunctional decoherence_functional(const HistorySpec& spec,
                                             const DensityMatrix& rho);

struct DecoherenceCheck {
  bool is_decoherent = false;
  double max_offdiag = 0.0;
};

DecoherenceCheck decoherence_check(const DecoherenceFunctional& d, double tol);

using HistoryControl = std::function<UnitaryOperator(const HistoryLabels&)>;

/// sum_z U_z C_z x C_z^dagger U_z^dagger on any operator x.
Matrix post_history_apply(const Matrix& x,
                          const std::vector<ClassOperator>& ops,
                          const std::vector<Matrix>& controls);

/// rho -> sum_z U_z C_z rho C_z^dagger U_z^dagger as an exact map with its
/// Kraus-form linear extension.
DynamicalMap post_history_controlled_map(const HistorySpec& spec,
                                         const HistoryControl& ctrl);

}  // namespace fwt
