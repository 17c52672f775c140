#include "fwtlab/histories/histories.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "fwtlab/core/ops.hpp"

namespace fwt {

HistorySpec::HistorySpec(std::vector<double> times,
                         std::vector<ProjectorSet> sets, Observable h)
    : times_(std::move(times)), sets_(std::move(sets)), h_(std::move(h)) {
  if (times_.empty() || times_.size() != sets_.size()) {
    throw InvalidInput("HistorySpec: need one projector set per time");
  }
  if (times_.size() > kMaxTimes) {
    throw InvalidInput("HistorySpec: at most 6 times");
  }
  std::size_t count = 1;
  double previous = 0.0;
  for (std::size_t j = 0; j < times_.size(); ++j) {
    if (!std::isfinite(times_[j]) || times_[j] < 0.0 ||
        (j > 0 && !(times_[j] > previous))) {
      throw InvalidInput("HistorySpec: times must be nonnegative and strictly increasing");
    }
    previous = times_[j];
    if (sets_[j].dim() != h_.dim()) {
      throw InvalidInput("HistorySpec: projector set " + std::to_string(j) +
                         " has the wrong dimension");
    }
    count *= sets_[j].size();
  }
  if (count > kMaxHistories) {
    throw InvalidInput("HistorySpec: more than 64 label tuples");
  }
}

std::vector<HistoryLabels> HistorySpec::histories() const {
  std::vector<HistoryLabels> out{{}};
  for (const ProjectorSet& s : sets_) {
    std::vector<HistoryLabels> next;
    for (const HistoryLabels& prefix : out) {
      for (int label : s.labels()) {
        HistoryLabels h = prefix;
        h.push_back(label);
        next.push_back(std::move(h));
      }
    }
    out = std::move(next);
  }
  return out;
}

ClassOperator class_operator(const HistorySpec& spec,
                             const HistoryLabels& labels) {
  if (labels.size() != spec.length()) {
    throw InvalidInput("class_operator: label tuple has the wrong length");
  }
  Matrix c = Matrix::Identity(spec.dim(), spec.dim());
  double t = 0.0;
  for (std::size_t j = 0; j < spec.length(); ++j) {
    const double step = spec.times()[j] - t;
    if (step > 0.0) {
      c = UnitaryOperator::exp_i(spec.hamiltonian(), step).matrix() * c;
    }
    c = spec.set(j).projector(spec.set(j).index_of(labels[j])) * c;
    t = spec.times()[j];
  }
  return {labels, c};
}

std::vector<ClassOperator> class_operators(const HistorySpec& spec) {
  std::vector<ClassOperator> out;
  for (const HistoryLabels& h : spec.histories()) {
    out.push_back(class_operator(spec, h));
  }
  return out;
}

DecoherenceFunctional decoherence_functional(const HistorySpec& spec,
                                             const DensityMatrix& rho) {
  if (rho.dim() != spec.dim()) {
    throw InvalidInput("decoherence_functional: dimension mismatch");
  }
  const std::vector<ClassOperator> ops = class_operators(spec);
  DecoherenceFunctional f;
  const Index n = static_cast<Index>(ops.size());
  f.d.resize(n, n);
  std::vector<Matrix> c_rho;
  for (const ClassOperator& c : ops) {
    f.labels.push_back(c.labels);
    c_rho.push_back(c.matrix * rho.matrix());
  }
  for (Index z = 0; z < n; ++z) {
    const Matrix& cz = ops[static_cast<std::size_t>(z)].matrix;
    for (Index u = 0; u < n; ++u) {
      // tr(C_z^dagger C_u rho) = sum_ij conj(C_z)_ij (C_u rho)_ij
      f.d(z, u) = cz.conjugate().cwiseProduct(c_rho[static_cast<std::size_t>(u)]).sum();
    }
  }
  return f;
}

DecoherenceCheck decoherence_check(const DecoherenceFunctional& d, double tol) {
  DecoherenceCheck r;
  for (Index z = 0; z < d.d.rows(); ++z) {
    for (Index u = 0; u < d.d.cols(); ++u) {
      if (z != u) r.max_offdiag = std::max(r.max_offdiag, std::abs(d.d(z, u)));
    }
  }
  r.is_decoherent = r.max_offdiag <= tol;
  return r;
}

Matrix post_history_apply(const Matrix& x,
                          const std::vector<ClassOperator>& ops,
                          const std::vector<Matrix>& controls) {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const Matrix kz = controls[k] * ops[k].matrix;
    out += kz * x * kz.adjoint();
  }
  return out;
}

DynamicalMap post_history_controlled_map(const HistorySpec& spec,
                                         const HistoryControl& ctrl) {
  auto ops = std::make_shared<std::vector<ClassOperator>>(class_operators(spec));
  auto controls = std::make_shared<std::vector<Matrix>>();
  for (const ClassOperator& c : *ops) {
    const UnitaryOperator u = ctrl(c.labels);
    if (u.dim() != spec.dim()) {
      throw InvalidInput("post_history_controlled_map: control dimension");
    }
    controls->push_back(u.matrix());
  }
  DynamicalMap m;
  m.name = "post-history control";
  m.dim = spec.dim();
  m.linear = [ops, controls](const Matrix& x) {
    return post_history_apply(x, *ops, *controls);
  };
  m.evaluate = [ops, controls](const DensityMatrix& rho) {
    return DensityMatrix::unchecked(post_history_apply(rho.matrix(), *ops, *controls));
  };
  return m;
}

}  // namespace fwt
