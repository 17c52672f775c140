#pragma once

#include "fwtlab/core/types.hpp"

namespace fwt {

/// rho(t) = U(t) rho U(t)^dagger with U(t) = exp(-i H t).
DensityMatrix evolve_unitary(const DensityMatrix& rho, const Observable& h,
                             double t);

/// U rho U^dagger.
DensityMatrix apply_unitary(const DensityMatrix& rho, const UnitaryOperator& u);

/// Matrix-level conjugation without state validation; used by maps that are
/// applied to non-state probes.
Matrix conjugate(const Matrix& u, const Matrix& x);

namespace ops {

Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();

/// Annihilation operator on the Fock space truncated to `cutoff` levels.
Matrix annihilation(Index cutoff);
/// (a + a^dagger) / sqrt(2)
Matrix position(Index cutoff);
/// (a - a^dagger) / (i sqrt(2))
Matrix momentum(Index cutoff);
Matrix number(Index cutoff);

Vector basis_vector(Index dim, Index k);

}  // namespace ops
}  // namespace fwt
