#pragma once

#include <cstdint>
#include <random>

#include "fwtlab/core/types.hpp"

namespace fwt {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream index). Streams are derived by a
/// SplitMix64 mix so that parallel and serial runs see identical draws.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

std::uint64_t splitmix64(std::uint64_t x);

/// rho = G G^dagger / tr(G G^dagger), G a dim x rank matrix of standard
/// complex Gaussians. rank == dim gives the Hilbert-Schmidt ensemble.
DensityMatrix random_density_matrix(Index dim, Index rank, std::uint64_t seed);

/// Haar-random unitary (QR of a Ginibre matrix with phase fix).
UnitaryOperator random_unitary(Index dim, std::uint64_t seed);

/// Matrix of i.i.d. standard complex Gaussians, E|g|^2 = 1.
Matrix ginibre(Index rows, Index cols, Rng& rng);

}  // namespace fwt
