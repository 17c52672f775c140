#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "fwtlab/core/channel.hpp"
#include "fwtlab/core/ensemble_stats.hpp"

namespace fwt {

/// The object the Free Will Test interrogates: a state map rho -> rho',
/// either evaluated exactly or estimated from Monte-Carlo realizations.
struct DynamicalMap {
  enum class Kind { exact, monte_carlo };

  std::string name;
  Index dim = 0;
  Kind kind = Kind::exact;

  /// Exact maps: deterministic evaluation.
  StateMap evaluate;
  /// Extension to arbitrary operators, present when the map has a declared
  /// linear (Kraus) form. Enables Choi-matrix diagnostics.
  std::optional<LinearMap> linear;

  /// Monte-Carlo maps: n realizations for input rho, with stream `seed`.
  std::function<SampleSet(const DensityMatrix&, Index n, std::uint64_t seed)>
      sample;
  Index n = 0;
  std::uint64_t seed = 0;

  /// Probe generator; defaults to random_density_matrix(dim, rank, seed)
  /// with a seed-dependent rank when empty.
  std::function<DensityMatrix(std::uint64_t seed)> probe;
};

}  // namespace fwt
