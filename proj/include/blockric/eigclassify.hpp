#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "blockric/blockmodel.hpp"
#include "blockric/matrix.hpp"
#include "blockric/numkernel.hpp"

namespace blockric {

// Trichotomy for an eigenvalue lambda of the assembled operator, witnessed in
// H1. With R the reduced resolvent of A0 at lambda and E0 the eigenprojection
// of A0 at lambda:
//   CASE_I    lambda not an eigenvalue of A0:  (A1-l)y = V* R(l) V y
//   CASE_II   lambda eigenvalue of A0, eigenvector H0-part E0-free: same
//             equation, with R(l) now the boundary limit of the resolvent
//   CASE_III  E0-component present:  (A1-l)y = V* R(l) V y - V* x,
//             x = E0 y0 nonzero
// CASE_I and CASE_II witnesses carry finite coupling energy at lambda and
// make up the usable point-spectrum family; CASE_III witnesses do not.
enum class CaseTag { I, II, III };

inline const char* to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::I: return "I";
    case CaseTag::II: return "II";
    default: return "III";
  }
}

struct Witness {
  Matrix y;                // n x 1, unit norm, first nonzero coordinate positive real
  CaseTag tag = CaseTag::I;
  std::optional<Matrix> x;  // d0 x 1, present exactly for CASE_III
  bool in_k_pp = true;      // tag is I or II
};

struct EigenvalueClassification {
  double lambda = 0.0;
  std::size_t multiplicity = 0;
  std::vector<Witness> witnesses;  // linearly independent, count == multiplicity
};

struct KppPair {
  double lambda;
  Matrix y;  // n x 1 unit witness
};

namespace detail {

// Scale a vector to unit norm with its first nonzero coordinate positive
// real; the same factor must be applied to any companion quantities.
inline Complex canonical_scale(const Matrix& v) {
  const double norm = v.frobenius_norm();
  for (std::size_t i = 0; i < v.rows(); ++i) {
    const Complex c = v(i, 0);
    if (std::abs(c) > 1e-12 * norm) return std::conj(c) / (std::abs(c) * norm);
  }
  return Complex(1.0 / norm, 0.0);
}

inline double classification_scale(const BlockOperator& op, double lambda, const Matrix& r) {
  const double v_norm = op.v().frobenius_norm();
  return std::max(1.0, op.a1().frobenius_norm() + std::abs(lambda) +
                           v_norm * v_norm * r.frobenius_norm() + v_norm);
}

}  // namespace detail

// Classifies every eigenvalue cluster of the assembled operator and derives
// canonical witnesses. Within a cluster that meets the point spectrum of A0,
// the witness basis splits the eigenspace into the kernel of w -> E0 y0(w)
// (CASE_II) and its complement (CASE_III).
inline std::vector<EigenvalueClassification> classify_all(const BlockOperator& op,
                                                          const ToleranceProfile& tol = {}) {
  tol.validate();
  const std::size_t d0 = op.d0(), n = op.n();
  const Matrix b = assemble_full(op);
  const HermitianEigen eig_b = hermitian_eig(b, tol);
  const HermitianEigen eig_a0 = hermitian_eig(op.a0(), tol);
  const double radius_b = cluster_radius(eig_b, tol);
  const double radius_a0 = cluster_radius(eig_a0, tol);
  const auto clusters = cluster_eigenvalues(eig_b.eigenvalues, radius_b);

  std::vector<EigenvalueClassification> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    EigenvalueClassification cls;
    cls.lambda = c.value;
    cls.multiplicity = c.end - c.begin;

    const std::size_t k = cls.multiplicity;
    Matrix y0(d0, k), y1(n, k);
    for (std::size_t j = 0; j < k; ++j) {
      const Matrix w = eig_b.vectors.col(c.begin + j);
      y0.set_col(j, w.block(0, 0, d0, 1));
      y1.set_col(j, w.block(d0, 0, n, 1));
    }

    double gap = 1e300;
    for (double mu : eig_a0.eigenvalues) gap = std::min(gap, std::abs(mu - cls.lambda));
    const bool in_spec_a0 = gap <= radius_a0;
    const Matrix r = reduced_resolvent(eig_a0, cls.lambda, tol);
    const double scale = detail::classification_scale(op, cls.lambda, r);

    auto push_witness = [&](const Matrix& y_raw, const Matrix& x_raw, bool case3) {
      Witness w;
      const Complex s = detail::canonical_scale(y_raw);
      w.y = y_raw * s;
      Matrix residual = (op.a1() - Matrix::identity(n) * Complex(cls.lambda, 0.0)) * w.y -
                        op.v().adjoint() * (r * (op.v() * w.y));
      if (case3) {
        w.tag = CaseTag::III;
        w.in_k_pp = false;
        w.x = x_raw * s;
        residual += op.v().adjoint() * (*w.x);
      } else {
        w.tag = in_spec_a0 ? CaseTag::II : CaseTag::I;
        w.in_k_pp = true;
      }
      if (residual.frobenius_norm() > tol.residual_tol * scale)
        throw ClassificationResidual("classify_all: case equation residual too large at lambda=" +
                                     std::to_string(cls.lambda));
      cls.witnesses.push_back(std::move(w));
    };

    if (!in_spec_a0) {
      for (std::size_t j = 0; j < k; ++j) push_witness(y1.col(j), Matrix(), false);
    } else {
      const Matrix e0 = eigenprojection_at(eig_a0, cls.lambda, tol);
      const Matrix f = e0 * y0;
      const auto svd = singular_value_decomposition(f);
      std::size_t rank3 = 0;
      for (double s : svd.values)
        if (s > tol.rank_rtol) ++rank3;
      // E0-free combinations first (CASE_II), then the CASE_III complement.
      for (std::size_t j = rank3; j < k; ++j)
        push_witness(y1 * svd.right.col(j), Matrix(), false);
      for (std::size_t j = 0; j < rank3; ++j)
        push_witness(y1 * svd.right.col(j), f * svd.right.col(j), true);
    }
    out.push_back(std::move(cls));
  }
  return out;
}

// Flattened (lambda, y) pairs usable for the point-spectrum construction,
// i.e. all CASE_I and CASE_II witnesses in cluster order.
inline std::vector<KppPair> k_pp_members(const std::vector<EigenvalueClassification>& classified) {
  std::vector<KppPair> out;
  for (const auto& cls : classified)
    for (const auto& w : cls.witnesses)
      if (w.in_k_pp) out.push_back(KppPair{cls.lambda, w.y});
  return out;
}

}  // namespace blockric
