#include "fwtlab/assignments/assignments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fwtlab/core/ops.hpp"

namespace fwt {

ClassicalValue ClassicalValue::label(int k) { return ClassicalValue(k); }

ClassicalValue ClassicalValue::scalar(double x) {
  if (!std::isfinite(x)) throw InvalidInput("ClassicalValue: non-finite");
  return ClassicalValue(x);
}

ClassicalValue ClassicalValue::pair(double q, double p) {
  if (!std::isfinite(q) || !std::isfinite(p)) {
    throw InvalidInput("ClassicalValue: non-finite");
  }
  return ClassicalValue(std::make_pair(q, p));
}

ClassicalValue::Kind ClassicalValue::kind() const {
  return static_cast<Kind>(v_.index());
}

int ClassicalValue::as_label() const {
  if (const int* k = std::get_if<int>(&v_)) return *k;
  throw InvalidInput("ClassicalValue: not a label");
}

double ClassicalValue::as_scalar() const {
  if (const double* x = std::get_if<double>(&v_)) return *x;
  throw InvalidInput("ClassicalValue: not a scalar");
}

std::pair<double, double> ClassicalValue::as_pair() const {
  if (const auto* z = std::get_if<std::pair<double, double>>(&v_)) return *z;
  throw InvalidInput("ClassicalValue: not a pair");
}

OutcomeEnsemble::OutcomeEnsemble(std::vector<Outcome> entries,
                                 double dropped_weight, double raw_weight_sum)
    : entries_(std::move(entries)),
      dropped_(dropped_weight),
      raw_sum_(raw_weight_sum) {
  double total = 0.0;
  for (const Outcome& o : entries_) {
    if (!(o.weight >= 0.0) || o.weight > 1.0) {
      throw InvalidInput("OutcomeEnsemble: weight outside [0,1]");
    }
    total += o.weight;
  }
  if (std::abs(total - 1.0) > 1e-8) {
    throw InvalidInput("OutcomeEnsemble: weights sum to " +
                       std::to_string(total));
  }
}

Matrix OutcomeEnsemble::average_state() const {
  if (entries_.empty()) throw InvalidInput("OutcomeEnsemble: empty");
  const Index d = entries_.front().post_state.dim();
  Matrix m = Matrix::Zero(d, d);
  for (const Outcome& o : entries_) m += o.weight * o.post_state.matrix();
  return m;
}

ControlPolicy ControlPolicy::table(std::map<int, UnitaryOperator> table) {
  if (table.empty()) throw InvalidInput("ControlPolicy: empty table");
  ControlPolicy c;
  c.dim_ = table.begin()->second.dim();
  for (const auto& [k, u] : table) {
    if (u.dim() != c.dim_) throw InvalidInput("ControlPolicy: mixed dims");
  }
  c.table_ = std::move(table);
  return c;
}

ControlPolicy ControlPolicy::constant(UnitaryOperator u) {
  ControlPolicy c;
  c.dim_ = u.dim();
  c.constant_ = std::move(u);
  return c;
}

ControlPolicy ControlPolicy::identity(Index dim) {
  return constant(UnitaryOperator::identity(dim));
}

ControlPolicy ControlPolicy::exponential(Gain g, Observable generator) {
  if (!g) throw InvalidInput("ControlPolicy: empty gain");
  ControlPolicy c;
  c.dim_ = generator.dim();
  c.gain_ = std::move(g);
  c.generator_ = std::move(generator);
  return c;
}

double ControlPolicy::gain(const ClassicalValue& z) const {
  if (!gain_) throw InvalidInput("ControlPolicy: not an exponential policy");
  const double g = gain_(z);
  if (!std::isfinite(g)) throw InvalidInput("ControlPolicy: non-finite gain");
  return g;
}

UnitaryOperator ControlPolicy::unitary(const ClassicalValue& z) const {
  if (constant_) return *constant_;
  if (generator_) return UnitaryOperator::exp_i(*generator_, gain(z));
  const auto it = table_.find(z.as_label());
  if (it == table_.end()) {
    throw InvalidInput("ControlPolicy: no unitary for label " +
                       std::to_string(z.as_label()));
  }
  return it->second;
}

namespace {

void require_dims(Index a, Index b, const char* what) {
  if (a != b) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

}  // namespace

OutcomeEnsemble projective_assign(const DensityMatrix& rho,
                                  const ProjectorSet& p) {
  require_dims(rho.dim(), p.dim(), "projective_assign");
  std::vector<Outcome> out;
  double dropped = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Matrix& pk = p.projector(k);
    const Matrix post = pk * rho.matrix() * pk;
    const double w = std::min(post.trace().real(), 1.0);
    if (w <= kDropWeight) {
      dropped += std::max(w, 0.0);
      continue;
    }
    out.push_back({ClassicalValue::label(p.label(k)), w,
                   DensityMatrix::unchecked(post / w)});
  }
  if (out.empty()) {
    throw InvalidInput("projective_assign: every outcome has zero weight");
  }
  return OutcomeEnsemble(std::move(out), dropped);
}

Matrix controlled_average_apply(const Matrix& x, const ProjectorSet& p,
                                const ControlPolicy& ctrl) {
  require_dims(x.rows(), p.dim(), "controlled_average_map");
  require_dims(ctrl.dim(), p.dim(), "controlled_average_map");
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Matrix kz =
        ctrl.unitary(ClassicalValue::label(p.label(k))).matrix() *
        p.projector(k);
    out += kz * x * kz.adjoint();
  }
  return out;
}

DensityMatrix controlled_average_map(const DensityMatrix& rho,
                                     const ProjectorSet& p,
                                     const ControlPolicy& ctrl) {
  return DensityMatrix::unchecked(controlled_average_apply(rho.matrix(), p, ctrl));
}

std::vector<Matrix> controlled_average_kraus(const ProjectorSet& p,
                                             const ControlPolicy& ctrl) {
  require_dims(ctrl.dim(), p.dim(), "controlled_average_kraus");
  std::vector<Matrix> k;
  for (std::size_t i = 0; i < p.size(); ++i) {
    k.push_back(ctrl.unitary(ClassicalValue::label(p.label(i))).matrix() *
                p.projector(i));
  }
  return k;
}

OutcomeEnsemble meanfield_assign(const DensityMatrix& rho, const Observable& q) {
  require_dims(rho.dim(), q.dim(), "meanfield_assign");
  return OutcomeEnsemble({{ClassicalValue::scalar(rho.expectation(q)), 1.0, rho}});
}

DensityMatrix meanfield_controlled_step(const DensityMatrix& rho,
                                        const Observable& q,
                                        const std::function<double(double)>& g,
                                        const Observable& f, double dt) {
  require_dims(rho.dim(), q.dim(), "meanfield_controlled_step");
  require_dims(rho.dim(), f.dim(), "meanfield_controlled_step");
  if (!(dt > 0.0)) throw InvalidInput("meanfield_controlled_step: dt <= 0");
  const double z = rho.expectation(q);
  const double gz = g(z);
  if (!std::isfinite(gz)) throw InvalidInput("meanfield_controlled_step: gain");
  return evolve_unitary(rho, f, gz * dt);
}

}  // namespace fwt
