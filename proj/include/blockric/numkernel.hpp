#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "blockric/errors.hpp"
#include "blockric/matrix.hpp"
#include "blockric/tolerance.hpp"

namespace blockric {

struct HermitianEigen {
  std::vector<double> eigenvalues;  // ascending
  Matrix vectors;                   // column k pairs with eigenvalues[k]
};

namespace detail {

// Unitary 2x2 that diagonalizes [[alpha, gamma], [conj(gamma), beta]],
// alpha/beta real. Returns {u00, u01, u10, u11}: columns are eigenvectors.
struct Rotation2 {
  Complex u00, u01, u10, u11;
};

inline Rotation2 hermitian_rotation(double alpha, double beta, Complex gamma) {
  const double r = std::abs(gamma);
  const Complex phase = gamma / r;  // caller guarantees r > 0
  // Phase-align to the real symmetric case, then a classic Jacobi angle.
  // hypot keeps the tangent nonzero when theta * theta would overflow; the
  // rotation must keep making progress even for wildly graded pairs.
  const double theta = (beta - alpha) / (2.0 * r);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(1.0, theta));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;
  return Rotation2{phase * c, phase * s, Complex(-s, 0.0), Complex(c, 0.0)};
}

inline double offdiagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.rows(); ++p)
    for (std::size_t q = p + 1; q < a.cols(); ++q) s += std::norm(a(p, q));
  return std::sqrt(2.0 * s);
}

inline void sort_eigenpairs(std::vector<double>& values, Matrix& vectors) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> sorted_values(n);
  Matrix sorted_vectors(vectors.rows(), n);
  for (std::size_t k = 0; k < n; ++k) {
    sorted_values[k] = values[order[k]];
    sorted_vectors.set_col(k, vectors.col(order[k]));
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

}  // namespace detail

// Cyclic Jacobi diagonalization of a Hermitian matrix. Eigenvalues come out
// ascending; eigenvector columns are orthonormal to machine precision.
inline HermitianEigen hermitian_eig(const Matrix& m, const ToleranceProfile& tol = {}) {
  tol.validate();
  if (!m.is_square()) throw DimensionMismatch("hermitian_eig: matrix must be square");
  if (m.empty()) throw InvalidInput("hermitian_eig: empty matrix");
  if (!m.is_finite()) throw InvalidInput("hermitian_eig: non-finite entries");
  if (!is_hermitian(m, tol.rank_rtol)) throw NotHermitian("hermitian_eig: matrix is not Hermitian");

  const std::size_t n = m.rows();
  Matrix a = (m + m.adjoint()) * Complex(0.5, 0.0);
  Matrix vectors = Matrix::identity(n);
  const double scale = std::max(a.frobenius_norm(), 1e-300);

  constexpr int kMaxSweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    if (detail::offdiagonal_norm(a) <= 1e-15 * scale) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const auto rot =
            detail::hermitian_rotation(a(p, p).real(), a(q, q).real(), apq);
        for (std::size_t i = 0; i < n; ++i) {  // columns: a <- a * U
          const Complex aip = a(i, p), aiq = a(i, q);
          a(i, p) = aip * rot.u00 + aiq * rot.u10;
          a(i, q) = aip * rot.u01 + aiq * rot.u11;
        }
        for (std::size_t j = 0; j < n; ++j) {  // rows: a <- U^* a
          const Complex apj = a(p, j), aqj = a(q, j);
          a(p, j) = std::conj(rot.u00) * apj + std::conj(rot.u10) * aqj;
          a(q, j) = std::conj(rot.u01) * apj + std::conj(rot.u11) * aqj;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const Complex vip = vectors(i, p), viq = vectors(i, q);
          vectors(i, p) = vip * rot.u00 + viq * rot.u10;
          vectors(i, q) = vip * rot.u01 + viq * rot.u11;
        }
      }
    }
  }
  if (!converged && detail::offdiagonal_norm(a) > 1e-13 * scale)
    throw NoConvergence("hermitian_eig: Jacobi sweeps did not converge");

  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i).real();
  detail::sort_eigenpairs(values, vectors);
  return HermitianEigen{std::move(values), std::move(vectors)};
}

struct SingularValueDecomposition {
  std::vector<double> values;  // descending, all >= 0
  Matrix left;                 // columns scaled to unit norm where values > 0
  Matrix right;                // unitary; m * right.col(k) = values[k] * left.col(k)
};

// One-sided Jacobi SVD: orthogonalizes the columns of a working copy by
// unitary right-rotations. Singular values retain high relative accuracy,
// which the rank decisions below depend on.
inline SingularValueDecomposition singular_value_decomposition(const Matrix& m) {
  if (m.empty()) throw InvalidInput("singular_value_decomposition: empty matrix");
  if (!m.is_finite()) throw InvalidInput("singular_value_decomposition: non-finite entries");

  const std::size_t rows = m.rows(), cols = m.cols();
  Matrix w = m;
  Matrix right = Matrix::identity(cols);

  std::vector<double> sq(cols);  // squared column norms, kept incrementally fresh
  auto recompute = [&](std::size_t j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += std::norm(w(i, j));
    sq[j] = s;
  };
  for (std::size_t j = 0; j < cols; ++j) recompute(j);

  constexpr int kMaxSweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        if (sq[p] <= 0.0 || sq[q] <= 0.0) continue;
        Complex g = 0.0;
        for (std::size_t i = 0; i < rows; ++i) g += std::conj(w(i, p)) * w(i, q);
        // Split square roots: the product of two tiny column norms underflows.
        if (std::abs(g) <= 1e-14 * std::sqrt(sq[p]) * std::sqrt(sq[q])) continue;
        converged = false;
        const auto rot = detail::hermitian_rotation(sq[p], sq[q], g);
        for (std::size_t i = 0; i < rows; ++i) {
          const Complex wip = w(i, p), wiq = w(i, q);
          w(i, p) = wip * rot.u00 + wiq * rot.u10;
          w(i, q) = wip * rot.u01 + wiq * rot.u11;
        }
        for (std::size_t i = 0; i < cols; ++i) {
          const Complex rip = right(i, p), riq = right(i, q);
          right(i, p) = rip * rot.u00 + riq * rot.u10;
          right(i, q) = rip * rot.u01 + riq * rot.u11;
        }
        recompute(p);
        recompute(q);
      }
    }
  }
  if (!converged) {
    // Rounding noise in the pairwise inner products can keep the tight
    // threshold out of reach; accept any residual coupling that is already
    // far below what the rank decisions downstream can see.
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < cols; ++p)
      for (std::size_t q = p + 1; q < cols; ++q) {
        if (sq[p] <= 0.0 || sq[q] <= 0.0) continue;
        Complex g = 0.0;
        for (std::size_t i = 0; i < rows; ++i) g += std::conj(w(i, p)) * w(i, q);
        const double denom = std::sqrt(sq[p]) * std::sqrt(sq[q]);
        if (denom > 0.0) worst = std::max(worst, std::abs(g) / denom);
      }
    if (worst > 1e-12)
      throw NoConvergence("singular_value_decomposition: sweeps did not converge");
  }

  std::vector<double> values(cols);
  for (std::size_t j = 0; j < cols; ++j) values[j] = std::sqrt(sq[j]);
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  SingularValueDecomposition out;
  out.values.resize(cols);
  out.left = Matrix(rows, cols);
  out.right = Matrix(cols, cols);
  for (std::size_t k = 0; k < cols; ++k) {
    const std::size_t j = order[k];
    out.values[k] = values[j];
    Matrix u = w.col(j);
    if (values[j] > 0.0) u *= Complex(1.0 / values[j], 0.0);
    out.left.set_col(k, u);
    out.right.set_col(k, right.col(j));
  }
  return out;
}

inline double spectral_norm(const Matrix& m) {
  if (m.empty()) return 0.0;
  return singular_value_decomposition(m).values.front();
}

inline std::size_t numerical_rank(const Matrix& m, const ToleranceProfile& tol = {}) {
  tol.validate();
  const auto svd = singular_value_decomposition(m);
  const double cutoff = tol.rank_rtol * svd.values.front();
  if (svd.values.front() == 0.0) return 0;
  std::size_t rank = 0;
  for (double s : svd.values)
    if (s > cutoff) ++rank;
  return rank;
}

// Orthonormal basis of the column space, consistent with numerical_rank.
inline Matrix orthonormal_column_space(const Matrix& m, const ToleranceProfile& tol = {}) {
  tol.validate();
  const auto svd = singular_value_decomposition(m);
  const double cutoff = tol.rank_rtol * svd.values.front();
  std::size_t rank = 0;
  if (svd.values.front() > 0.0)
    for (double s : svd.values)
      if (s > cutoff) ++rank;
  return rank ? svd.left.block(0, 0, m.rows(), rank) : Matrix(m.rows(), 0);
}

// Gaussian elimination with partial pivoting; rejects numerically singular
// systems outright rather than returning a least-squares answer.
inline Matrix solve_linear(const Matrix& m, const Matrix& rhs, const ToleranceProfile& tol = {}) {
  tol.validate();
  if (!m.is_square()) throw DimensionMismatch("solve_linear: matrix must be square");
  if (m.rows() != rhs.rows()) throw DimensionMismatch("solve_linear: rhs row count differs");
  if (!m.is_finite() || !rhs.is_finite()) throw InvalidInput("solve_linear: non-finite entries");
  const std::size_t n = m.rows(), k = rhs.cols();

  Matrix a = m, x = rhs;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(a(col, col));
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(a(i, col)) > best) {
        best = std::abs(a(i, col));
        piv = i;
      }
    if (best == 0.0) throw SingularMatrix("solve_linear: zero pivot");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      for (std::size_t j = 0; j < k; ++j) std::swap(x(col, j), x(piv, j));
    }
    const Complex d = a(col, col);
    for (std::size_t i = col + 1; i < n; ++i) {
      const Complex f = a(i, col) / d;
      if (f == Complex(0.0, 0.0)) continue;
      a(i, col) = 0.0;
      for (std::size_t j = col + 1; j < n; ++j) a(i, j) -= f * a(col, j);
      for (std::size_t j = 0; j < k; ++j) x(i, j) -= f * x(col, j);
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    const Complex d = a(col, col);
    for (std::size_t j = 0; j < k; ++j) {
      Complex s = x(col, j);
      for (std::size_t l = col + 1; l < n; ++l) s -= a(col, l) * x(l, j);
      x(col, j) = s / d;
    }
  }

  // Backward-error gate instead of a rank pre-check: shifted Hermitian systems
  // arbitrarily close to the spectrum are still solvable to full relative
  // accuracy, and partial pivoting keeps the defect at rounding level.
  if (!x.is_finite()) throw SingularMatrix("solve_linear: matrix is numerically singular");
  const double defect = (m * x - rhs).frobenius_norm();
  if (defect > tol.residual_tol * (m.frobenius_norm() * x.frobenius_norm() + rhs.frobenius_norm()))
    throw SingularMatrix("solve_linear: residual check failed (matrix too ill-conditioned)");
  return x;
}

struct EigenvalueCluster {
  double value;       // mean of the member eigenvalues
  std::size_t begin;  // index range [begin, end) into the ascending list
  std::size_t end;
};

// Chain clustering: consecutive eigenvalues within `radius` belong together.
inline std::vector<EigenvalueCluster> cluster_eigenvalues(const std::vector<double>& ascending,
                                                          double radius) {
  std::vector<EigenvalueCluster> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= ascending.size(); ++i) {
    if (i == ascending.size() || ascending[i] - ascending[i - 1] > radius) {
      double mean = 0.0;
      for (std::size_t j = begin; j < i; ++j) mean += ascending[j];
      mean /= static_cast<double>(i - begin);
      out.push_back(EigenvalueCluster{mean, begin, i});
      begin = i;
    }
  }
  return out;
}

// Cluster radius used everywhere eigenvalues of `eig` are compared to a point.
inline double cluster_radius(const HermitianEigen& eig, const ToleranceProfile& tol) {
  double norm = 0.0;
  for (double v : eig.eigenvalues) norm = std::max(norm, std::abs(v));
  return tol.eig_cluster_tol * std::max(norm, 1e-300);
}

// Spectral projection onto the eigenvalues within the cluster radius of z.
inline Matrix eigenprojection_at(const HermitianEigen& eig, double z, const ToleranceProfile& tol) {
  const double radius = cluster_radius(eig, tol);
  const std::size_t d = eig.vectors.rows();
  Matrix p(d, d);
  for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
    if (std::abs(eig.eigenvalues[k] - z) > radius) continue;
    const Matrix v = eig.vectors.col(k);
    p += v * v.adjoint();
  }
  return p;
}

// Sum of (mu - z)^-1 v v^* over eigenvalues mu outside the cluster radius of
// z. This realizes the boundary limit of the resolvent at a spectral point:
// the divergent eigendirections are removed exactly rather than regularized.
inline Matrix reduced_resolvent(const HermitianEigen& eig, double z,
                                const ToleranceProfile& tol = {}) {
  tol.validate();
  const double radius = cluster_radius(eig, tol);
  const std::size_t d = eig.vectors.rows();
  Matrix r(d, d);
  for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
    const double gap = eig.eigenvalues[k] - z;
    if (std::abs(gap) <= radius) continue;
    const Matrix v = eig.vectors.col(k);
    r += (v * v.adjoint()) * Complex(1.0 / gap, 0.0);
  }
  return r;
}

}  // namespace blockric
