#pragma once

#include <functional>
#include <vector>

#include "fwtlab/core/types.hpp"

namespace fwt {

/// A state-to-state map. Maps used with choi_of_map must be linear; only
/// density-matrix inputs are ever passed.
using StateMap = std::function<DensityMatrix(const DensityMatrix&)>;

/// Choi matrix of a linear map, probed on states only.
///
/// Each off-diagonal matrix unit is written as a complex combination of four
/// density matrices,
///   E_ij = P(+) + i P(+i) - (1+i)/2 (E_ii + E_jj),
/// with |+> = (|i> + |j>)/sqrt2 and |+i> = (|i> + i|j>)/sqrt2, and the map is
/// extended by linearity. Maps that are not linear produce a meaningless
/// result; the FWT harness only calls this for maps declared linear.
ChoiMatrix choi_of_map(const StateMap& map, Index dim);

/// A map defined on arbitrary operators (its linear extension).
using LinearMap = std::function<Matrix(const Matrix&)>;

/// Choi matrix from images of the matrix units E_ij directly.
ChoiMatrix choi_of_linear(const LinearMap& map, Index dim);

struct CpTpReport {
  double min_eigenvalue = 0.0;
  double tp_deficit = 0.0;
  bool is_cp = false;
  bool is_tp = false;
};

/// is_cp <=> lambda_min(C) >= -tol;  is_tp <=> ||Tr_out C - 1||_max <= tol.
CpTpReport cp_tp_check(const ChoiMatrix& c, double tol);

/// Partial trace of the Choi matrix over the output factor.
Matrix trace_out_output(const ChoiMatrix& c);

/// sum_k K rho K^dagger on an arbitrary operator.
Matrix apply_kraus(const std::vector<Matrix>& kraus, const Matrix& x);

/// sum_k K^dagger K
Matrix kraus_completeness(const std::vector<Matrix>& kraus);

}  // namespace fwt
