#pragma once

#include "blockric/errors.hpp"

namespace blockric {

// Numerical thresholds shared across the library. All three are relative:
// they get scaled by a norm of the operand at the point of use.
//   eig_cluster_tol  eigenvalues closer than this (times the spectral norm)
//                    are treated as one spectral point
//   rank_rtol        singular values below this fraction of the largest are
//                    treated as zero
//   residual_tol     acceptance bound for algebraic identities (case
//                    equations, Riccati residuals, linear-solve checks)
struct ToleranceProfile {
  double eig_cluster_tol = 1e-8;
  double rank_rtol = 1e-10;
  double residual_tol = 1e-8;

  void validate() const {
    if (!(eig_cluster_tol > 0) || !(rank_rtol > 0) || !(residual_tol > 0))
      throw InvalidInput("ToleranceProfile: all tolerances must be positive");
  }
};

}  // namespace blockric
