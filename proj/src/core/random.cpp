#include "fwtlab/core/random.hpp"

#include <cmath>

namespace fwt {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ull)));
}

Matrix ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n01(0.0, std::sqrt(0.5));
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double re = n01(rng);
      const double im = n01(rng);
      g(i, j) = cplx(re, im);
    }
  }
  return g;
}

DensityMatrix random_density_matrix(Index dim, Index rank,
                                    std::uint64_t seed) {
  if (dim < 1 || rank < 1 || rank > dim) {
    throw InvalidInput("random_density_matrix: need 1 <= rank <= dim");
  }
  Rng rng = make_stream(seed, 0);
  const Matrix g = ginibre(dim, rank, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::unchecked(rho);
}

UnitaryOperator random_unitary(Index dim, std::uint64_t seed) {
  if (dim < 1) throw InvalidInput("random_unitary: dim < 1");
  Rng rng = make_stream(seed, 1);
  const Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < dim; ++k) {
    const cplx d = r(k, k);
    if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
  }
  return UnitaryOperator::from_matrix(q);
}

}  // namespace fwt
