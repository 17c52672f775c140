#include "fwtlab/assignments/husimi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fwt {

namespace {

Index node_count(double extent, double step) {
  if (!(extent > 0.0) || !(step > 0.0)) {
    throw InvalidInput("CoherentBasis: extents and spacings must be positive");
  }
  return static_cast<Index>(std::lround(2.0 * extent / step)) + 1;
}

void check_guard(const Matrix& rho, Index cutoff) {
  if (rho.rows() != cutoff) {
    throw InvalidInput("husimi: state dimension differs from Fock cutoff");
  }
  const double top = rho(cutoff - 1, cutoff - 1).real();
  if (top > kTopLevelMass) {
    throw InvalidInput("husimi: top Fock level population " +
                       std::to_string(top) + " exceeds guard; raise cutoff");
  }
}

void check_raw_sum(double raw) {
  if (raw < kMinRawWeight) {
    throw InvalidInput("husimi: raw weight sum " + std::to_string(raw) +
                       " < 0.99; enlarge the phase-space grid or cutoff");
  }
}

RealVector diag_weights(const Matrix& frame, const Matrix& x, double cell) {
  const Matrix xf = x * frame;
  return (frame.conjugate().cwiseProduct(xf)).colwise().sum().real().transpose() *
         cell;
}

}  // namespace

Vector CoherentBasis::amplitudes(Index cutoff, double q, double p) {
  const cplx a = cplx(q, p) / std::numbers::sqrt2;
  Vector v(cutoff);
  v(0) = std::exp(-0.5 * std::norm(a));
  for (Index n = 1; n < cutoff; ++n) v(n) = v(n - 1) * a / std::sqrt(double(n));
  return v;
}

CoherentBasis::CoherentBasis(Index cutoff, double q_extent, double p_extent,
                             double dq, double dp)
    : cutoff_(cutoff), cell_(dq * dp / (2.0 * std::numbers::pi)) {
  if (cutoff < 2) throw InvalidInput("CoherentBasis: cutoff < 2");
  const Index nq = node_count(q_extent, dq);
  const Index np = node_count(p_extent, dp);
  frame_.resize(cutoff, nq * np);
  states_.resize(cutoff, nq * np);
  Index k = 0;
  for (Index i = 0; i < nq; ++i) {
    for (Index j = 0; j < np; ++j, ++k) {
      const double q = -q_extent + double(i) * dq;
      const double p = -p_extent + double(j) * dp;
      q_.push_back(q);
      p_.push_back(p);
      frame_.col(k) = amplitudes(cutoff, q, p);
      states_.col(k) = frame_.col(k).normalized();
      if (q * q + p * p > double(cutoff) / 4.0) ++outside_;
    }
  }
}

double CoherentBasis::frame_deficit() const {
  const Matrix s = cell_ * frame_ * frame_.adjoint();
  return max_abs(s - Matrix::Identity(cutoff_, cutoff_));
}

OutcomeEnsemble husimi_assign(const DensityMatrix& rho,
                              const CoherentBasis& basis) {
  check_guard(rho.matrix(), basis.cutoff());
  const RealVector w = diag_weights(basis.frame(), rho.matrix(), basis.cell_measure());
  const double raw = w.sum();
  check_raw_sum(raw);
  std::vector<Outcome> out;
  double dropped = 0.0;
  for (Index k = 0; k < basis.points(); ++k) {
    const double wk = w(k) / raw;
    if (wk <= kDropWeight) {
      dropped += std::max(wk, 0.0);
      continue;
    }
    out.push_back({basis.point(k), wk, DensityMatrix::pure(basis.states().col(k))});
  }
  // the kept weights are renormalized once more so they sum to one exactly
  const double kept = 1.0 - dropped;
  for (Outcome& o : out) o.weight /= kept;
  return OutcomeEnsemble(std::move(out), dropped, raw);
}

HusimiChannel::HusimiChannel(const CoherentBasis& basis,
                             const ControlPolicy& ctrl)
    : frame_(basis.frame()), post_(basis.states()), cell_(basis.cell_measure()) {
  if (ctrl.dim() != basis.cutoff()) {
    throw InvalidInput("HusimiChannel: control dimension differs from cutoff");
  }
  if (const auto& f = ctrl.generator()) {
    const Matrix& e = f->eigenvectors();
    const RealVector& lam = f->eigenvalues();
    const Matrix rotated = e.adjoint() * post_;
    for (Index k = 0; k < basis.points(); ++k) {
      const double g = ctrl.gain(basis.point(k));
      Vector phased = rotated.col(k);
      for (Index n = 0; n < phased.size(); ++n) {
        phased(n) *= std::polar(1.0, -g * lam(n));
      }
      post_.col(k) = e * phased;
    }
  } else {
    for (Index k = 0; k < basis.points(); ++k) {
      post_.col(k) = ctrl.unitary(basis.point(k)).matrix() * post_.col(k);
    }
  }
}

RealVector HusimiChannel::raw_weights(const Matrix& x) const {
  if (x.rows() != dim()) throw InvalidInput("HusimiChannel: dimension mismatch");
  return diag_weights(frame_, x, cell_);
}

Matrix HusimiChannel::apply_raw(const Matrix& x) const {
  if (x.rows() != dim()) throw InvalidInput("HusimiChannel: dimension mismatch");
  // <z|x|z> is complex for non-Hermitian x, so no real part here
  const Matrix xf = x * frame_;
  const Vector w = (frame_.conjugate().cwiseProduct(xf)).colwise().sum().transpose() *
                   cell_;
  return post_ * w.asDiagonal() * post_.adjoint();
}

DensityMatrix HusimiChannel::apply(const DensityMatrix& rho) const {
  check_guard(rho.matrix(), dim());
  const RealVector w = raw_weights(rho.matrix());
  const double raw = w.sum();
  check_raw_sum(raw);
  const Matrix out = post_ * (w / raw).cast<cplx>().asDiagonal() * post_.adjoint();
  return DensityMatrix::unchecked(out);
}

DensityMatrix husimi_controlled_average_map(const DensityMatrix& rho,
                                            const CoherentBasis& basis,
                                            const ControlPolicy& ctrl) {
  return HusimiChannel(basis, ctrl).apply(rho);
}

}  // namespace fwt
