#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fwt {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation leaves its numerical validity domain
/// (NaN, positivity loss beyond budget, guard violations detected mid-run).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tolerances used by constructors and comparisons. All are absolute and
/// overridable from experiment configuration.
struct Tolerances {
  double hermitian = 1e-12;
  double construct = 1e-10;
  double compare = 1e-9;
};

double max_abs(const Matrix& m);

/// ||m - m^dagger||_max
double hermiticity_error(const Matrix& m);

/// Sum of singular values.
double trace_norm(const Matrix& m);

class Observable;

/// Hermitian, unit-trace, positive semidefinite d x d matrix.
///
/// Instances are immutable. Every factory validates its input against the
/// three invariants and stores the exact Hermitian part, so the stored
/// matrix is Hermitian to the last bit.
class DensityMatrix {
 public:
  static DensityMatrix from_matrix(const Matrix& m, double tol = 1e-10);
  /// Normalizes psi; rejects the zero vector.
  static DensityMatrix pure(const Vector& psi);
  static DensityMatrix basis(Index dim, Index k);
  static DensityMatrix maximally_mixed(Index dim);
  /// alpha * a + (1 - alpha) * b, alpha in [0, 1].
  static DensityMatrix mixture(double alpha, const DensityMatrix& a,
                               const DensityMatrix& b);
  /// Hot-path factory for operations that preserve the invariants by
  /// construction (unitary conjugation, Kraus maps). Only Hermitizes and
  /// fixes the trace; performs no spectral check.
  static DensityMatrix unchecked(const Matrix& m);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  cplx operator()(Index i, Index j) const { return m_(i, j); }

  double purity() const;
  double min_eigenvalue() const;
  double expectation(const Observable& q) const;
  double expectation(const Matrix& q) const;

 private:
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Hermitian operator with a cached spectral decomposition.
class Observable {
 public:
  static Observable from_matrix(const Matrix& m, double tol = 1e-12);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const RealVector& eigenvalues() const { return evals_; }
  const Matrix& eigenvectors() const { return evecs_; }

 private:
  Observable(Matrix m, RealVector evals, Matrix evecs)
      : m_(std::move(m)), evals_(std::move(evals)), evecs_(std::move(evecs)) {}
  Matrix m_;
  RealVector evals_;
  Matrix evecs_;
};

class UnitaryOperator {
 public:
  static UnitaryOperator from_matrix(const Matrix& m, double tol = 1e-10);
  static UnitaryOperator identity(Index dim);
  /// exp(-i * generator * t) through the Hermitian eigendecomposition.
  static UnitaryOperator exp_i(const Observable& generator, double t);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

 private:
  explicit UnitaryOperator(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Complete set of mutually orthogonal Hermitian projectors with integer
/// outcome labels.
class ProjectorSet {
 public:
  ProjectorSet(std::vector<int> labels, std::vector<Matrix> projectors,
               double tol = 1e-10);
  /// Rank-one projectors onto the columns of an orthonormal basis, labelled
  /// 0..d-1.
  static ProjectorSet from_basis(const Matrix& basis, double tol = 1e-10);
  static ProjectorSet computational(Index dim);

  Index dim() const { return dim_; }
  std::size_t size() const { return projectors_.size(); }
  int label(std::size_t k) const { return labels_[k]; }
  const Matrix& projector(std::size_t k) const { return projectors_[k]; }
  const std::vector<int>& labels() const { return labels_; }
  /// Position of a label, throws InvalidInput when absent.
  std::size_t index_of(int label) const;

 private:
  Index dim_ = 0;
  std::vector<int> labels_;
  std::vector<Matrix> projectors_;
};

/// Choi matrix C = sum_ij E_ij (x) M(E_ij), input factor first.
struct ChoiMatrix {
  Index input_dim = 0;
  Index output_dim = 0;
  Matrix entries;
};

}  // namespace fwt
