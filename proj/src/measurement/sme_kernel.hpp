#pragma once

#include <cmath>

#include "fwtlab/measurement/sme.hpp"

namespace fwt::detail {

/// Step kernel working in the eigenbasis of q, templated on the matrix type
/// so qubits run on fixed-size 2x2 storage.
template <class M>
class SmeKernel {
 public:
  using RV = Eigen::Matrix<double, M::RowsAtCompileTime, 1>;
  using CV = Eigen::Matrix<cplx, M::RowsAtCompileTime, 1>;

  explicit SmeKernel(const SmeConfig& cfg)
      : dt_(cfg.dt),
        a_(2.0 * std::sqrt(cfg.gamma) * cfg.dt),
        s_(std::sqrt(cfg.dt)),
        lambda_(cfg.lambda),
        strip_(cfg.strip_noise),
        measure_(cfg.gamma > 0.0) {
    const Matrix& v = cfg.q.eigenvectors();
    v_ = v;
    qk_ = cfg.q.eigenvalues();
    const Matrix h = v.adjoint() * cfg.h.matrix() * v;
    has_h_ = max_abs(h) > 0.0;
    if (has_h_) {
      const Observable hq = Observable::from_matrix(0.5 * (h + h.adjoint()));
      uh_ = UnitaryOperator::exp_i(hq, cfg.dt).matrix();
    }
    const Matrix f = v.adjoint() * cfg.f.matrix() * v;
    const Observable fq = Observable::from_matrix(0.5 * (f + f.adjoint()));
    fv_ = fq.eigenvectors();
    fl_ = fq.eigenvalues();
    mu_ = a_ * qk_;
  }

  Index dim() const { return qk_.size(); }
  M to_q_basis(const Matrix& rho) const { return v_.adjoint() * rho * v_; }
  Matrix from_q_basis(const M& rho) const { return v_ * rho * v_.adjoint(); }

  /// Advances rho in place; returns true when the step is flagged.
  bool step(M& rho, double z_prev, double xi, double& z, double& mean_q) const {
    if (has_h_) rho = uh_ * rho * uh_.adjoint();
    if (lambda_ != 0.0 && z_prev != 0.0) {
      CV ph(dim());
      for (Index k = 0; k < dim(); ++k) {
        ph(k) = std::polar(1.0, -lambda_ * z_prev * fl_(k) * dt_);
      }
      const M u = fv_ * ph.asDiagonal() * fv_.adjoint();
      rho = u * rho * u.adjoint();
    }

    RV w = rho.diagonal().real().cwiseMax(0.0);
    const double wsum = w.sum();
    w /= wsum;
    mean_q = w.dot(qk_);
    if (!measure_) {
      z = mean_q;
      return false;
    }
    const double y = gaussian_mixture_quantile(w.data(), mu_.data(),
                                               static_cast<int>(dim()), s_, xi);
    RV e(dim());
    for (Index k = 0; k < dim(); ++k) {
      const double d = y - mu_(k);
      e(k) = d * d / (4.0 * dt_);
    }
    const double emin = e.minCoeff();
    RV m(dim());
    for (Index k = 0; k < dim(); ++k) m(k) = std::exp(emin - e(k));
    rho = m.asDiagonal() * rho * m.asDiagonal();
    const double tr = rho.trace().real();
    rho /= tr;
    rho = 0.5 * (rho + rho.adjoint()).eval();
    z = y / a_;
    return min_eigenvalue(rho) < -1e-6;
  }

  double signal(double z, double mean_q) const { return strip_ ? mean_q : z; }

 private:
  static double min_eigenvalue(const M& rho) {
    if constexpr (M::RowsAtCompileTime == 2) {
      const double a = rho(0, 0).real(), d = rho(1, 1).real();
      const double half = 0.5 * (a - d);
      return 0.5 * (a + d) - std::sqrt(half * half + std::norm(rho(0, 1)));
    } else {
      Eigen::SelfAdjointEigenSolver<M> es(rho, Eigen::EigenvaluesOnly);
      return es.eigenvalues()(0);
    }
  }

  double dt_, a_, s_, lambda_;
  bool strip_, measure_;
  bool has_h_ = false;
  M v_, uh_, fv_;
  RV qk_, fl_, mu_;
};

}  // namespace fwt::detail
