#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "blockric/blockmodel.hpp"
#include "blockric/eigclassify.hpp"
#include "blockric/matrix.hpp"
#include "blockric/numkernel.hpp"

namespace blockric {

// Solutions X : H0 -> H1 of the operator Riccati equation
//
//     A1 X - X A0 - X V X + V* = 0,
//
// whose graphs { x (+) Xx } are invariant subspaces of the assembled
// operator. Candidate solutions are built from point-spectrum witness pairs
// (Lambda sets); an exhaustive eigenvector-subset oracle cross-checks them on
// small problems.

struct LambdaSet {
  std::vector<KppPair> pairs;  // exactly n, witnesses unit norm
  Matrix y;                    // n x n, column k is pairs[k].y, full rank
};

// Validates n candidate pairs: stacked witnesses must be independent and each
// pair must satisfy its case equation through the reduced resolvent.
inline LambdaSet build_lambda(const BlockOperator& op, const std::vector<KppPair>& pairs,
                              const ToleranceProfile& tol = {}) {
  tol.validate();
  const std::size_t n = op.n();
  if (pairs.size() != n)
    throw DimensionMismatch("build_lambda: need exactly " + std::to_string(n) + " pairs");

  const HermitianEigen eig_a0 = hermitian_eig(op.a0(), tol);
  LambdaSet set;
  set.y = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = pairs[k].lambda;
    Matrix y = pairs[k].y;
    if (y.rows() != n || y.cols() != 1)
      throw DimensionMismatch("build_lambda: witness must be an n-vector");
    const double norm = y.frobenius_norm();
    if (norm == 0.0) throw DependentWitnesses("build_lambda: zero witness");
    y *= Complex(1.0 / norm, 0.0);

    const Matrix vy = op.v() * y;
    const Matrix e0 = eigenprojection_at(eig_a0, lambda, tol);
    const Matrix r = reduced_resolvent(eig_a0, lambda, tol);
    const double scale = detail::classification_scale(op, lambda, r);
    if ((e0 * vy).frobenius_norm() > tol.residual_tol * scale)
      throw CaseEquationFailed("build_lambda: V y not in Ran(A0 - lambda) at lambda=" +
                               std::to_string(lambda));
    const Matrix residual =
        (op.a1() - Matrix::identity(n) * Complex(lambda, 0.0)) * y - op.v().adjoint() * (r * vy);
    if (residual.frobenius_norm() > tol.residual_tol * scale)
      throw CaseEquationFailed("build_lambda: case equation violated at lambda=" +
                               std::to_string(lambda));
    set.pairs.push_back(KppPair{lambda, y});
    set.y.set_col(k, y);
  }
  if (numerical_rank(set.y, tol) < n)
    throw DependentWitnesses("build_lambda: witnesses are linearly dependent");
  return set;
}

struct ObliqueProjectionFamily {
  std::vector<Matrix> projections;  // P_k = Y E_kk Y^-1; idempotent, summing to I
};

inline ObliqueProjectionFamily oblique_projections(const LambdaSet& set,
                                                   const ToleranceProfile& tol = {}) {
  const std::size_t n = set.pairs.size();
  const Matrix y_inv = solve_linear(set.y, Matrix::identity(n), tol);
  ObliqueProjectionFamily family;
  family.projections.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    family.projections.push_back(set.y.col(k) * y_inv.block(k, 0, 1, n));
  return family;
}

inline double riccati_residual(const BlockOperator& op, const Matrix& x) {
  if (x.rows() != op.n() || x.cols() != op.d0())
    throw DimensionMismatch("riccati_residual: x must be n x d0");
  const Matrix lhs = op.a1() * x - x * op.a0() - x * (op.v() * x) + op.v().adjoint();
  return lhs.frobenius_norm();
}

namespace detail {

// Gram-Schmidt with reorthogonalization; callers guarantee full column rank.
inline Matrix orthonormalize_columns(const Matrix& m) {
  Matrix q = m;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    Matrix v = q.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < j; ++i) {
        const Matrix qi = q.col(i);
        v -= qi * (qi.adjoint() * v)(0, 0);
      }
    v *= Complex(1.0 / v.frobenius_norm(), 0.0);
    q.set_col(j, v);
  }
  return q;
}

inline double riccati_scale(const BlockOperator& op, const Matrix& x) {
  const double x_norm = spectral_norm(x);
  return (spectral_norm(op.a0()) + spectral_norm(op.a1()) + spectral_norm(op.v())) *
         (1.0 + x_norm) * (1.0 + x_norm);
}

}  // namespace detail

// Spectral norm of (I - G) B G where G projects onto the graph of x. Zero
// exactly when the graph is an invariant subspace.
inline double graph_invariance_defect(const BlockOperator& op, const Matrix& x) {
  if (x.rows() != op.n() || x.cols() != op.d0())
    throw DimensionMismatch("graph_invariance_defect: x must be n x d0");
  const Matrix q = detail::orthonormalize_columns(vstack(Matrix::identity(op.d0()), x));
  Matrix t = assemble_full(op) * q;
  t -= q * (q.adjoint() * t);
  return spectral_norm(t);
}

struct RiccatiSolution {
  Matrix x;  // n x d0
  std::optional<LambdaSet> lambda_set;  // present when built from witness pairs
  double residual = 0.0;
  double graph_defect = 0.0;
  bool bounded = true;  // always true in finite dimensions
  bool k0_restricted = false;
};

// X_Lambda = sum_j P_j^* V^* R(lambda_j): the solution attached to a
// validated Lambda set. Its graph carries the spectral subspace
// complementary to the eigenvectors encoded by Lambda.
inline RiccatiSolution build_X_lambda(const BlockOperator& op, const LambdaSet& set,
                                      const ToleranceProfile& tol = {}) {
  tol.validate();
  const HermitianEigen eig_a0 = hermitian_eig(op.a0(), tol);
  const auto family = oblique_projections(set, tol);
  Matrix x(op.n(), op.d0());
  for (std::size_t j = 0; j < set.pairs.size(); ++j) {
    const Matrix r = reduced_resolvent(eig_a0, set.pairs[j].lambda, tol);
    x += family.projections[j].adjoint() * (op.v().adjoint() * r);
  }
  RiccatiSolution solution;
  solution.x = std::move(x);
  solution.lambda_set = set;
  solution.residual = riccati_residual(op, solution.x);
  solution.graph_defect = graph_invariance_defect(op, solution.x);
  return solution;
}

struct NoCertificate {
  std::string reason;
  std::size_t witnesses_needed = 0;
  std::size_t witnesses_found = 0;
  std::size_t pool_size = 0;  // usable point-spectrum pairs considered
  bool k0_restricted = false;
  std::vector<EigenvalueClassification> classifications;  // evidence
};

using ExistenceResult = std::variant<RiccatiSolution, NoCertificate>;

namespace detail {

inline double smallest_singular_value(const Matrix& m) {
  return singular_value_decomposition(m).values.back();
}

inline Matrix stack_witnesses(const std::vector<KppPair>& pool,
                              const std::vector<std::size_t>& chosen) {
  Matrix y(pool.empty() ? 0 : pool.front().y.rows(), chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) y.set_col(k, pool[chosen[k]].y);
  return y;
}

inline ExistenceResult solve_under_hypothesis(const BlockOperator& op,
                                              const ToleranceProfile& tol) {
  const std::size_t n = op.n();
  const auto classified = classify_all(op, tol);

  auto finish = [&](const std::vector<KppPair>& pairs) -> std::optional<RiccatiSolution> {
    try {
      RiccatiSolution solution = build_X_lambda(op, build_lambda(op, pairs, tol), tol);
      const double scale = riccati_scale(op, solution.x);
      const double b_norm = spectral_norm(assemble_full(op));
      if (solution.residual <= tol.residual_tol * scale &&
          solution.graph_defect <= tol.residual_tol * b_norm)
        return solution;
    } catch (const Error&) {
    }
    return std::nullopt;
  };

  // An eigenvalue of full multiplicity n supplies a complete Lambda set by
  // itself; prefer it when its witnesses are usable. Scanned from the top of
  // the spectrum down, matching the canonical order of the greedy pass.
  for (auto it = classified.rbegin(); it != classified.rend(); ++it) {
    const auto& cls = *it;
    if (cls.multiplicity != n) continue;
    bool usable = true;
    for (const auto& w : cls.witnesses) usable = usable && w.in_k_pp;
    if (!usable) continue;
    std::vector<KppPair> pairs;
    for (const auto& w : cls.witnesses) pairs.push_back(KppPair{cls.lambda, w.y});
    if (auto solution = finish(pairs)) return *solution;
  }

  // Greedy selection over the usable pool, smallest |lambda| first, keeping
  // the stacked witness matrix safely full-rank.
  std::vector<KppPair> pool = k_pp_members(classified);
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Largest eigenvalues first: the complementary graph subspace then sits at
  // the bottom of the spectrum, which is the canonical representative.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool[a].lambda > pool[b].lambda;
  });

  std::vector<std::size_t> chosen;
  for (std::size_t idx : order) {
    if (chosen.size() == n) break;
    chosen.push_back(idx);
    if (smallest_singular_value(stack_witnesses(pool, chosen)) <= tol.rank_rtol)
      chosen.pop_back();
  }

  if (chosen.size() < n) {
    NoCertificate failure;
    failure.reason = "fewer than n independent usable point-spectrum witnesses";
    failure.witnesses_needed = n;
    failure.witnesses_found = chosen.size();
    failure.pool_size = pool.size();
    failure.classifications = classified;
    return failure;
  }

  // One local-improvement pass: swap any chosen pair for an unchosen one when
  // that raises the smallest singular value of Y.
  double best = smallest_singular_value(stack_witnesses(pool, chosen));
  for (std::size_t slot = 0; slot < chosen.size(); ++slot) {
    for (std::size_t idx : order) {
      if (std::find(chosen.begin(), chosen.end(), idx) != chosen.end()) continue;
      std::vector<std::size_t> trial = chosen;
      trial[slot] = idx;
      const double sigma = smallest_singular_value(stack_witnesses(pool, trial));
      if (sigma > best * (1.0 + 1e-12)) {
        best = sigma;
        chosen = std::move(trial);
      }
    }
  }

  std::vector<KppPair> pairs;
  for (std::size_t idx : chosen) pairs.push_back(pool[idx]);
  if (auto solution = finish(pairs)) return *solution;

  NoCertificate failure;
  failure.reason = "selected Lambda set failed residual verification";
  failure.witnesses_needed = n;
  failure.witnesses_found = chosen.size();
  failure.pool_size = pool.size();
  failure.classifications = classified;
  return failure;
}

}  // namespace detail

// Existence pipeline: check the hypothesis, restricting to the Krylov core of
// (A0, Ran V) when cyclicity fails (the solution is extended by zero on the
// orthogonal complement); classify; select a Lambda set; build and verify.
inline ExistenceResult solve_existence(const BlockOperator& op, const ToleranceProfile& tol = {}) {
  tol.validate();
  const HypothesisReport hypothesis = check_hypothesis(op, tol);
  if (hypothesis.cyclic_ok) return detail::solve_under_hypothesis(op, tol);

  if (hypothesis.krylov_rank == 0) {
    // V = 0: the zero map solves the equation outright.
    RiccatiSolution solution;
    solution.x = Matrix(op.n(), op.d0());
    solution.residual = riccati_residual(op, solution.x);
    solution.graph_defect = graph_invariance_defect(op, solution.x);
    solution.k0_restricted = true;
    return solution;
  }

  const Matrix& q = hypothesis.krylov_basis;  // d0 x r, r >= 1
  Matrix a0_reduced = q.adjoint() * (op.a0() * q);
  a0_reduced = (a0_reduced + a0_reduced.adjoint()) * Complex(0.5, 0.0);
  const BlockOperator reduced(a0_reduced, op.a1(), q.adjoint() * op.v(), tol);

  ExistenceResult inner = detail::solve_under_hypothesis(reduced, tol);
  if (std::holds_alternative<NoCertificate>(inner)) {
    auto failure = std::get<NoCertificate>(std::move(inner));
    failure.k0_restricted = true;
    return failure;
  }
  auto solution = std::get<RiccatiSolution>(std::move(inner));
  solution.x = solution.x * q.adjoint();
  solution.residual = riccati_residual(op, solution.x);
  solution.graph_defect = graph_invariance_defect(op, solution.x);
  solution.k0_restricted = true;
  return solution;
}

struct OracleSolution {
  std::vector<std::size_t> subset;  // eigenvector indices spanning the graph
  Matrix x;
  double residual = 0.0;
};

// Exhaustive cross-check for small problems with simple spectrum: every
// d0-subset of eigenvectors whose H0-components are invertible yields a
// bounded solution X = W1 W0^-1, and every bounded solution arises this way.
inline std::vector<OracleSolution> oracle_graph_solutions(const BlockOperator& op,
                                                          const ToleranceProfile& tol = {}) {
  tol.validate();
  const std::size_t d0 = op.d0(), n = op.n(), dim = op.dim();
  if (dim > 20) throw InvalidInput("oracle_graph_solutions: dimension too large for enumeration");
  const HermitianEigen eig = hermitian_eig(assemble_full(op), tol);
  for (const auto& c : cluster_eigenvalues(eig.eigenvalues, cluster_radius(eig, tol)))
    if (c.end - c.begin > 1)
      throw DegenerateSpectrum("oracle_graph_solutions: spectrum is not simple");

  std::vector<OracleSolution> out;
  std::vector<std::size_t> subset(d0);
  for (std::size_t i = 0; i < d0; ++i) subset[i] = i;
  while (true) {
    Matrix w0(d0, d0), w1(n, d0);
    for (std::size_t k = 0; k < d0; ++k) {
      const Matrix w = eig.vectors.col(subset[k]);
      w0.set_col(k, w.block(0, 0, d0, 1));
      w1.set_col(k, w.block(d0, 0, n, 1));
    }
    if (numerical_rank(w0, tol) == d0) {
      try {
        Matrix x = w1 * solve_linear(w0, Matrix::identity(d0), tol);
        const double residual = riccati_residual(op, x);
        if (residual <= tol.residual_tol * detail::riccati_scale(op, x)) {
          bool duplicate = false;
          for (const auto& seen : out)
            if ((seen.x - x).max_abs() <= 1e-8 * (1.0 + seen.x.max_abs())) {
              duplicate = true;
              break;
            }
          if (!duplicate) out.push_back(OracleSolution{subset, std::move(x), residual});
        }
      } catch (const SingularMatrix&) {
      }
    }
    // next lexicographic d0-combination of {0, ..., dim-1}
    std::size_t i = d0;
    while (i-- > 0) {
      if (subset[i] + (d0 - i) < dim) {
        ++subset[i];
        for (std::size_t j = i + 1; j < d0; ++j) subset[j] = subset[j - 1] + 1;
        break;
      }
      if (i == 0) return out;
    }
  }
}

}  // namespace blockric
