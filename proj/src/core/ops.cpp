#include "fwtlab/core/ops.hpp"

#include <cmath>

namespace fwt {

DensityMatrix evolve_unitary(const DensityMatrix& rho, const Observable& h,
                             double t) {
  if (h.dim() != rho.dim()) {
    throw InvalidInput("evolve_unitary: dimension mismatch");
  }
  if (!std::isfinite(t)) throw InvalidInput("evolve_unitary: non-finite time");
  if (t == 0.0) return rho;
  return apply_unitary(rho, UnitaryOperator::exp_i(h, t));
}

DensityMatrix apply_unitary(const DensityMatrix& rho,
                            const UnitaryOperator& u) {
  if (u.dim() != rho.dim()) {
    throw InvalidInput("apply_unitary: dimension mismatch");
  }
  return DensityMatrix::unchecked(conjugate(u.matrix(), rho.matrix()));
}

Matrix conjugate(const Matrix& u, const Matrix& x) {
  Matrix tmp(u.rows(), x.cols());
  tmp.noalias() = u * x;
  Matrix out(u.rows(), u.rows());
  out.noalias() = tmp * u.adjoint();
  return out;
}

namespace ops {

Matrix sigma_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix sigma_y() {
  Matrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Matrix sigma_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix annihilation(Index cutoff) {
  if (cutoff < 1) throw InvalidInput("annihilation: cutoff < 1");
  Matrix a = Matrix::Zero(cutoff, cutoff);
  for (Index n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

Matrix position(Index cutoff) {
  const Matrix a = annihilation(cutoff);
  return (a + a.adjoint()) / std::sqrt(2.0);
}

Matrix momentum(Index cutoff) {
  const Matrix a = annihilation(cutoff);
  return (a - a.adjoint()) / cplx(0.0, std::sqrt(2.0));
}

Matrix number(Index cutoff) {
  Matrix n = Matrix::Zero(cutoff, cutoff);
  for (Index k = 0; k < cutoff; ++k) n(k, k) = double(k);
  return n;
}

Vector basis_vector(Index dim, Index k) {
  if (k < 0 || k >= dim) throw InvalidInput("basis_vector: index out of range");
  Vector v = Vector::Zero(dim);
  v(k) = 1.0;
  return v;
}

}  // namespace ops
}  // namespace fwt
