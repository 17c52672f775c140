#pragma once

#include <cstdint>
#include <vector>

#include "fwtlab/core/types.hpp"

namespace fwt {

using RowMatrix =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<cplx, 1, Eigen::Dynamic>;

/// Monte-Carlo realizations of a (possibly block-structured) quantum state.
///
/// Each row is one realization holding `block_weights.size()` square blocks
/// of size block_dim, flattened column-major. A plain density matrix is one
/// block with weight 1; a hybrid density is one block per classical cell with
/// weight equal to the cell width. The norm of a row is
/// sum_b weight_b * ||block_b||_tr.
class SampleSet {
 public:
  SampleSet(Index block_dim, std::vector<double> block_weights, Index rows);

  Index size() const { return data_.rows(); }
  Index block_dim() const { return block_dim_; }
  Index blocks() const { return static_cast<Index>(weights_.size()); }
  const std::vector<double>& block_weights() const { return weights_; }

  void set_block(Index row, Index block, const Matrix& m);
  Matrix block(const RowVector& row, Index block) const;

  RowMatrix& data() { return data_; }
  const RowMatrix& data() const { return data_; }

  RowVector mean() const { return mean(0, size()); }
  RowVector mean(Index first, Index count) const;
  double norm(const RowVector& row) const;

 private:
  Index block_dim_;
  std::vector<double> weights_;
  RowMatrix data_;
};

/// sqrt(E_b ||mean_b - mean||^2) over bootstrap resamples of the rows.
double bootstrap_standard_error(const SampleSet& s, int resamples,
                                std::uint64_t seed);

struct LadderPoint {
  Index n = 0;           ///< realizations per replicate
  Index replicates = 0;  ///< disjoint replicates averaged
  double mean_deficit = 0.0;
};

struct MixtureLinearityStats {
  Index n = 0;
  double alpha = 0.0;
  double deficit = 0.0;
  double se_mixture = 0.0;
  double se_first = 0.0;
  double se_second = 0.0;
  double combined_se = 0.0;
  double bound = 0.0;  ///< 3 x combined_se
  /// Deficits of disjoint sub-ensembles, ascending in n.
  std::vector<LadderPoint> ladder;
  /// mean deficit at the smallest ladder size over the next one; ~2 when the
  /// true deficit is zero (1/sqrt(n) decay per 4x), ~1 when it is not.
  double scaling_ratio = 0.0;
};

struct MixtureLinearityOptions {
  int bootstrap_resamples = 100;
  std::uint64_t bootstrap_seed = 0;
  /// Sub-ensemble sizes are n / divisor; each consecutive pair must differ
  /// by a factor of 4.
  std::vector<Index> ladder_divisors{64, 16, 4};
};

/// deficit = || mean(mix) - alpha mean(first) - (1-alpha) mean(second) ||
/// with bootstrap standard errors and a sub-ensemble ladder.
MixtureLinearityStats mixture_linearity(const SampleSet& mix,
                                        const SampleSet& first,
                                        const SampleSet& second, double alpha,
                                        const MixtureLinearityOptions& opts);

}  // namespace fwt
