#pragma once

#include <cstddef>
#include <utility>

#include "blockric/matrix.hpp"
#include "blockric/numkernel.hpp"
#include "blockric/tolerance.hpp"

namespace blockric {

// Two-component model operator
//
//     B = [ A0  V  ]   on  H0 (+) H1,    dim H0 = d0,  dim H1 = n,
//         [ V*  A1 ]
//
// with A0, A1 Hermitian. H1 occupies coordinates d0 .. d0+n-1 of the
// assembled matrix.
class BlockOperator {
 public:
  BlockOperator(Matrix a0, Matrix a1, Matrix v, const ToleranceProfile& tol = {})
      : a0_(std::move(a0)), a1_(std::move(a1)), v_(std::move(v)) {
    tol.validate();
    if (a0_.empty() || a1_.empty()) throw InvalidInput("BlockOperator: empty diagonal block");
    if (!a0_.is_finite() || !a1_.is_finite() || !v_.is_finite())
      throw InvalidInput("BlockOperator: non-finite entries");
    if (!a0_.is_square()) throw DimensionMismatch("BlockOperator: a0 must be square");
    if (!a1_.is_square()) throw DimensionMismatch("BlockOperator: a1 must be square");
    if (v_.rows() != a0_.rows() || v_.cols() != a1_.rows())
      throw DimensionMismatch("BlockOperator: v must be d0 x n");
    if (!is_hermitian(a0_, tol.rank_rtol)) throw NotHermitian("BlockOperator: a0 is not Hermitian");
    if (!is_hermitian(a1_, tol.rank_rtol)) throw NotHermitian("BlockOperator: a1 is not Hermitian");
  }

  const Matrix& a0() const { return a0_; }
  const Matrix& a1() const { return a1_; }
  const Matrix& v() const { return v_; }
  std::size_t d0() const { return a0_.rows(); }
  std::size_t n() const { return a1_.rows(); }
  std::size_t dim() const { return d0() + n(); }

 private:
  Matrix a0_, a1_, v_;
};

inline Matrix assemble_full(const BlockOperator& op) {
  Matrix b(op.dim(), op.dim());
  b.set_block(0, 0, op.a0());
  b.set_block(0, op.d0(), op.v());
  b.set_block(op.d0(), 0, op.v().adjoint());
  b.set_block(op.d0(), op.d0(), op.a1());
  return b;
}

// Embedding of H1, i.e. the last n coordinate columns of the identity.
inline Matrix h1_embedding(const BlockOperator& op) {
  Matrix j(op.dim(), op.n());
  for (std::size_t k = 0; k < op.n(); ++k) j(op.d0() + k, k) = 1.0;
  return j;
}

// Krylov matrix [m, a*m, a^2*m, ..., a^(steps-1)*m]. Each nonzero block is
// normalized to unit Frobenius norm; that leaves the column span (and hence
// the rank decision) unchanged while avoiding overflow for large powers.
inline Matrix krylov_matrix(const Matrix& a, const Matrix& m, std::size_t steps) {
  Matrix block = m;
  Matrix out(m.rows(), 0);
  for (std::size_t k = 0; k < steps; ++k) {
    Matrix scaled = block;
    const double norm = scaled.frobenius_norm();
    if (norm > 0.0) scaled *= Complex(1.0 / norm, 0.0);
    out = out.cols() ? hstack(out, scaled) : scaled;
    if (k + 1 < steps) block = a * scaled;
  }
  return out;
}

struct HypothesisReport {
  bool hermitian_ok = false;
  bool cyclic_ok = false;          // Ran V generates H0 under A0
  std::size_t krylov_rank = 0;     // cyclic_ok iff krylov_rank == d0
  Matrix krylov_basis;             // d0 x krylov_rank, orthonormal columns
  std::size_t d0 = 0;
  std::size_t n = 0;
};

// Checks the standing assumptions: both diagonal blocks Hermitian and Ran V a
// cyclic generating subspace for A0, decided by the rank of the Krylov matrix
// [V, A0 V, ..., A0^(d0-1) V].
inline HypothesisReport check_hypothesis(const BlockOperator& op, const ToleranceProfile& tol = {}) {
  tol.validate();
  HypothesisReport report;
  report.hermitian_ok = true;  // BlockOperator construction already enforced it
  report.d0 = op.d0();
  report.n = op.n();
  const Matrix krylov = krylov_matrix(op.a0(), op.v(), op.d0());
  if (krylov.frobenius_norm() == 0.0) {
    report.krylov_rank = 0;
    report.krylov_basis = Matrix(op.d0(), 0);
  } else {
    report.krylov_basis = orthonormal_column_space(krylov, tol);
    report.krylov_rank = report.krylov_basis.cols();
  }
  report.cyclic_ok = report.krylov_rank == op.d0();
  return report;
}

// Largest eigenvalue-cluster size, i.e. the maximal multiplicity of the
// spectrum at the working tolerance.
inline std::size_t multiplicity_of_spectrum(const Matrix& m, const ToleranceProfile& tol = {}) {
  const HermitianEigen eig = hermitian_eig(m, tol);
  const auto clusters = cluster_eigenvalues(eig.eigenvalues, cluster_radius(eig, tol));
  std::size_t mult = 0;
  for (const auto& c : clusters) mult = std::max(mult, c.end - c.begin);
  return mult;
}

}  // namespace blockric
