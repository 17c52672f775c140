#include "fwtlab/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fwt {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows()
       << "x" << m.cols();
    throw InvalidInput(os.str());
  }
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entries");
  }
}

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_error(const Matrix& m) { return max_abs(m - m.adjoint()); }

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (hermiticity_error(m) <= 1e-14 * std::max(1.0, max_abs(m))) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

// ---------------------------------------------------------------------------

DensityMatrix DensityMatrix::from_matrix(const Matrix& m, double tol) {
  require_square(m, "DensityMatrix");
  const double scale = std::max(1.0, max_abs(m));
  if (hermiticity_error(m) > tol * scale) {
    throw InvalidInput("DensityMatrix: input is not Hermitian");
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol) {
    std::ostringstream os;
    os << "DensityMatrix: trace " << tr << " differs from 1";
    throw InvalidInput(os.str());
  }
  Matrix h = hermitian_part(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) {
    std::ostringstream os;
    os << "DensityMatrix: negative eigenvalue " << es.eigenvalues().minCoeff();
    throw InvalidInput(os.str());
  }
  return DensityMatrix(std::move(h));
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  const double n = psi.norm();
  if (!(n > 0.0) || !psi.allFinite()) {
    throw InvalidInput("DensityMatrix::pure: zero or non-finite vector");
  }
  const Vector v = psi / n;
  return DensityMatrix(hermitian_part(v * v.adjoint()));
}

DensityMatrix DensityMatrix::basis(Index dim, Index k) {
  if (dim < 1 || k < 0 || k >= dim) {
    throw InvalidInput("DensityMatrix::basis: index out of range");
  }
  Matrix m = Matrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  if (dim < 1) throw InvalidInput("DensityMatrix::maximally_mixed: dim < 1");
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::mixture(double alpha, const DensityMatrix& a,
                                     const DensityMatrix& b) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("DensityMatrix::mixture: alpha outside [0, 1]");
  }
  if (a.dim() != b.dim()) {
    throw InvalidInput("DensityMatrix::mixture: dimension mismatch");
  }
  return DensityMatrix(alpha * a.m_ + (1.0 - alpha) * b.m_);
}

DensityMatrix DensityMatrix::unchecked(const Matrix& m) {
  require_square(m, "DensityMatrix::unchecked");
  Matrix h = hermitian_part(m);
  const double tr = h.trace().real();
  if (!(tr > 0.0)) {
    throw NumericalFailure("DensityMatrix::unchecked: non-positive trace");
  }
  h /= tr;
  return DensityMatrix(std::move(h));
}

double DensityMatrix::purity() const {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
  return m_.squaredNorm();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::expectation(const Observable& q) const {
  return expectation(q.matrix());
}

double DensityMatrix::expectation(const Matrix& q) const {
  if (q.rows() != dim() || q.cols() != dim()) {
    throw InvalidInput("expectation: dimension mismatch");
  }
  // tr(q rho) without forming the product
  return (q.transpose().cwiseProduct(m_)).sum().real();
}

// ---------------------------------------------------------------------------

Observable Observable::from_matrix(const Matrix& m, double tol) {
  require_square(m, "Observable");
  if (hermiticity_error(m) > tol * std::max(1.0, max_abs(m))) {
    throw InvalidInput("Observable: matrix is not Hermitian");
  }
  Matrix h = hermitian_part(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  return Observable(std::move(h), es.eigenvalues(), es.eigenvectors());
}

// ---------------------------------------------------------------------------

UnitaryOperator UnitaryOperator::from_matrix(const Matrix& m, double tol) {
  require_square(m, "UnitaryOperator");
  const Matrix defect = m.adjoint() * m - Matrix::Identity(m.rows(), m.cols());
  if (max_abs(defect) > tol) {
    throw InvalidInput("UnitaryOperator: matrix is not unitary");
  }
  return UnitaryOperator(m);
}

UnitaryOperator UnitaryOperator::identity(Index dim) {
  if (dim < 1) throw InvalidInput("UnitaryOperator::identity: dim < 1");
  return UnitaryOperator(Matrix::Identity(dim, dim));
}

UnitaryOperator UnitaryOperator::exp_i(const Observable& generator, double t) {
  if (!std::isfinite(t)) throw InvalidInput("exp_i: non-finite time");
  if (t == 0.0) return identity(generator.dim());
  const Matrix& v = generator.eigenvectors();
  Vector phases(generator.dim());
  for (Index k = 0; k < phases.size(); ++k) {
    phases(k) = std::polar(1.0, -generator.eigenvalues()(k) * t);
  }
  return UnitaryOperator(v * phases.asDiagonal() * v.adjoint());
}

// ---------------------------------------------------------------------------

ProjectorSet::ProjectorSet(std::vector<int> labels,
                           std::vector<Matrix> projectors, double tol)
    : labels_(std::move(labels)), projectors_(std::move(projectors)) {
  if (projectors_.empty() || labels_.size() != projectors_.size()) {
    throw InvalidInput("ProjectorSet: need one label per projector");
  }
  dim_ = projectors_.front().rows();
  Matrix sum = Matrix::Zero(dim_, dim_);
  for (std::size_t a = 0; a < projectors_.size(); ++a) {
    const Matrix& p = projectors_[a];
    require_square(p, "ProjectorSet");
    if (p.rows() != dim_) throw InvalidInput("ProjectorSet: mixed dimensions");
    if (hermiticity_error(p) > tol) {
      throw InvalidInput("ProjectorSet: projector is not Hermitian");
    }
    if (max_abs(p * p - p) > tol) {
      throw InvalidInput("ProjectorSet: P^2 != P");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (labels_[a] == labels_[b]) {
        throw InvalidInput("ProjectorSet: duplicate label");
      }
      if (max_abs(p * projectors_[b]) > tol) {
        throw InvalidInput("ProjectorSet: projectors are not orthogonal");
      }
    }
    sum += p;
  }
  if (max_abs(sum - Matrix::Identity(dim_, dim_)) > tol) {
    throw InvalidInput("ProjectorSet: projectors do not sum to identity");
  }
}

ProjectorSet ProjectorSet::from_basis(const Matrix& basis, double tol) {
  require_square(basis, "ProjectorSet::from_basis");
  std::vector<int> labels;
  std::vector<Matrix> ps;
  for (Index k = 0; k < basis.cols(); ++k) {
    labels.push_back(static_cast<int>(k));
    ps.emplace_back(basis.col(k) * basis.col(k).adjoint());
  }
  return ProjectorSet(std::move(labels), std::move(ps), tol);
}

ProjectorSet ProjectorSet::computational(Index dim) {
  return from_basis(Matrix::Identity(dim, dim));
}

std::size_t ProjectorSet::index_of(int label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw InvalidInput("ProjectorSet: unknown label " + std::to_string(label));
  }
  return static_cast<std::size_t>(it - labels_.begin());
}

}  // namespace fwt
