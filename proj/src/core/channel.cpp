#include "fwtlab/core/channel.hpp"

#include <cmath>

namespace fwt {

ChoiMatrix choi_of_map(const StateMap& map, Index dim) {
  if (dim < 1) throw InvalidInput("choi_of_map: dim < 1");
  const cplx i1(0.0, 1.0);

  // images of the diagonal units (pure basis states)
  std::vector<Matrix> diag;
  diag.reserve(static_cast<std::size_t>(dim));
  for (Index k = 0; k < dim; ++k) {
    diag.push_back(map(DensityMatrix::basis(dim, k)).matrix());
  }
  const Index dout = diag.front().rows();

  ChoiMatrix c;
  c.input_dim = dim;
  c.output_dim = dout;
  c.entries = Matrix::Zero(dim * dout, dim * dout);
  auto place = [&](Index i, Index j, const Matrix& image) {
    c.entries.block(i * dout, j * dout, dout, dout) = image;
  };

  for (Index i = 0; i < dim; ++i) {
    place(i, i, diag[static_cast<std::size_t>(i)]);
    for (Index j = i + 1; j < dim; ++j) {
      Vector plus = Vector::Zero(dim);
      plus(i) = 1.0;
      plus(j) = 1.0;
      Vector plus_i = Vector::Zero(dim);
      plus_i(i) = 1.0;
      plus_i(j) = i1;
      const Matrix mp = map(DensityMatrix::pure(plus)).matrix();
      const Matrix mpi = map(DensityMatrix::pure(plus_i)).matrix();
      const Matrix dsum = diag[static_cast<std::size_t>(i)] +
                          diag[static_cast<std::size_t>(j)];
      // E_ij = P+ + i P+i - (1+i)/2 (E_ii + E_jj)
      // E_ji = P+ - i P+i - (1-i)/2 (E_ii + E_jj)
      place(i, j, mp + i1 * mpi - 0.5 * (1.0 + i1) * dsum);
      place(j, i, mp - i1 * mpi - 0.5 * (1.0 - i1) * dsum);
    }
  }
  return c;
}

ChoiMatrix choi_of_linear(const LinearMap& map, Index dim) {
  if (dim < 1) throw InvalidInput("choi_of_linear: dim < 1");
  ChoiMatrix c;
  c.input_dim = dim;
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      Matrix e = Matrix::Zero(dim, dim);
      e(i, j) = 1.0;
      const Matrix image = map(e);
      if (c.entries.size() == 0) {
        c.output_dim = image.rows();
        c.entries = Matrix::Zero(dim * c.output_dim, dim * c.output_dim);
      }
      c.entries.block(i * c.output_dim, j * c.output_dim, c.output_dim,
                      c.output_dim) = image;
    }
  }
  return c;
}

Matrix trace_out_output(const ChoiMatrix& c) {
  Matrix t(c.input_dim, c.input_dim);
  for (Index i = 0; i < c.input_dim; ++i) {
    for (Index j = 0; j < c.input_dim; ++j) {
      t(i, j) = c.entries.block(i * c.output_dim, j * c.output_dim,
                                c.output_dim, c.output_dim)
                    .trace();
    }
  }
  return t;
}

CpTpReport cp_tp_check(const ChoiMatrix& c, double tol) {
  CpTpReport r;
  const Matrix h = 0.5 * (c.entries + c.entries.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.tp_deficit = max_abs(trace_out_output(c) -
                         Matrix::Identity(c.input_dim, c.input_dim));
  r.is_cp = r.min_eigenvalue >= -tol;
  r.is_tp = r.tp_deficit <= tol;
  return r;
}

Matrix apply_kraus(const std::vector<Matrix>& kraus, const Matrix& x) {
  if (kraus.empty()) throw InvalidInput("apply_kraus: no operators");
  Matrix out = Matrix::Zero(kraus.front().rows(), kraus.front().rows());
  for (const Matrix& k : kraus) out += k * x * k.adjoint();
  return out;
}

Matrix kraus_completeness(const std::vector<Matrix>& kraus) {
  if (kraus.empty()) throw InvalidInput("kraus_completeness: no operators");
  Matrix s = Matrix::Zero(kraus.front().cols(), kraus.front().cols());
  for (const Matrix& k : kraus) s += k.adjoint() * k;
  return s;
}

}  // namespace fwt
