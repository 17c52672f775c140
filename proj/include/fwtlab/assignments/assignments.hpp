#pragma once

#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "fwtlab/core/types.hpp"

namespace fwt {

/// Discrete label, real scalar, or phase-space pair (q, p).
class ClassicalValue {
 public:
  enum class Kind { label, scalar, pair };

  static ClassicalValue label(int k);
  static ClassicalValue scalar(double x);
  static ClassicalValue pair(double q, double p);

  Kind kind() const;
  int as_label() const;
  double as_scalar() const;
  std::pair<double, double> as_pair() const;

  bool operator==(const ClassicalValue& o) const { return v_ == o.v_; }

 private:
  explicit ClassicalValue(std::variant<int, double, std::pair<double, double>> v)
      : v_(std::move(v)) {}
  std::variant<int, double, std::pair<double, double>> v_;
};

struct Outcome {
  ClassicalValue z;
  double weight;
  DensityMatrix post_state;
};

/// Realization statistics of an assignment. Weights are nonnegative and sum
/// to one; mass removed below the drop threshold is kept in dropped_weight.
class OutcomeEnsemble {
 public:
  explicit OutcomeEnsemble(std::vector<Outcome> entries,
                           double dropped_weight = 0.0,
                           double raw_weight_sum = 1.0);

  const std::vector<Outcome>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const Outcome& operator[](std::size_t k) const { return entries_[k]; }
  double dropped_weight() const { return dropped_; }
  /// Sum of weights before renormalization (Husimi truncation diagnostic).
  double raw_weight_sum() const { return raw_sum_; }
  /// sum_z p_z rho_z
  Matrix average_state() const;

 private:
  std::vector<Outcome> entries_;
  double dropped_;
  double raw_sum_;
};

/// z -> U_z. Either a lookup table over discrete labels, a fixed unitary, or
/// the exponential family U_z = exp(-i g(z) F).
class ControlPolicy {
 public:
  using Gain = std::function<double(const ClassicalValue&)>;

  static ControlPolicy table(std::map<int, UnitaryOperator> table);
  static ControlPolicy constant(UnitaryOperator u);
  static ControlPolicy identity(Index dim);
  static ControlPolicy exponential(Gain g, Observable generator);

  Index dim() const { return dim_; }
  UnitaryOperator unitary(const ClassicalValue& z) const;
  /// Gain and generator for exponential policies, for callers that cache
  /// the generator's eigenbasis.
  const std::optional<Observable>& generator() const { return generator_; }
  double gain(const ClassicalValue& z) const;

 private:
  ControlPolicy() = default;
  Index dim_ = 0;
  std::map<int, UnitaryOperator> table_;
  std::optional<UnitaryOperator> constant_;
  Gain gain_;
  std::optional<Observable> generator_;
};

inline constexpr double kDropWeight = 1e-12;

OutcomeEnsemble projective_assign(const DensityMatrix& rho,
                                  const ProjectorSet& p);

/// sum_z U_z P_z x P_z U_z^dagger on any operator x.
Matrix controlled_average_apply(const Matrix& x, const ProjectorSet& p,
                                const ControlPolicy& ctrl);

DensityMatrix controlled_average_map(const DensityMatrix& rho,
                                     const ProjectorSet& p,
                                     const ControlPolicy& ctrl);

/// Kraus operators U_z P_z of the controlled average map.
std::vector<Matrix> controlled_average_kraus(const ProjectorSet& p,
                                             const ControlPolicy& ctrl);

/// Deterministic z = tr(q rho), post-state rho.
OutcomeEnsemble meanfield_assign(const DensityMatrix& rho, const Observable& q);

/// One step rho -> exp(-i g(z) F dt) rho exp(i g(z) F dt) with z = tr(q rho).
DensityMatrix meanfield_controlled_step(const DensityMatrix& rho,
                                        const Observable& q,
                                        const std::function<double(double)>& g,
                                        const Observable& f, double dt);

}  // namespace fwt
