#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "blockric/blockmodel.hpp"
#include "blockric/matrix.hpp"
#include "blockric/numkernel.hpp"

namespace blockric {

// M(z) = J* (B - z)^-1 J, the resolvent of the full operator compressed to
// H1. For Im z > 0 the imaginary part of M(z) is positive semidefinite.
inline Matrix m_resolvent(const BlockOperator& op, Complex z, const ToleranceProfile& tol = {}) {
  Matrix shifted = assemble_full(op);
  for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, i) -= z;
  const Matrix x = solve_linear(shifted, h1_embedding(op), tol);
  return x.block(op.d0(), 0, op.n(), op.n());
}

// Same function computed through the Schur complement:
// M(z) = [(A1 - z) - V* (A0 - z)^-1 V]^-1.
inline Matrix m_schur(const BlockOperator& op, Complex z, const ToleranceProfile& tol = {}) {
  Matrix a0_shifted = op.a0();
  for (std::size_t i = 0; i < a0_shifted.rows(); ++i) a0_shifted(i, i) -= z;
  const Matrix g = solve_linear(a0_shifted, op.v(), tol);
  Matrix s = op.a1() - op.v().adjoint() * g;
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) -= z;
  return solve_linear(s, Matrix::identity(op.n()), tol);
}

struct HerglotzSample {
  Complex z;
  Matrix m;       // n x n
  Complex trace;  // trace of m
};

inline HerglotzSample herglotz_sample(const BlockOperator& op, Complex z,
                                      const ToleranceProfile& tol = {}) {
  HerglotzSample s;
  s.z = z;
  s.m = m_schur(op, z, tol);
  s.trace = s.m.trace();
  return s;
}

struct Atom {
  double lambda;
  double mass;        // trace of omega_block, strictly positive
  Matrix omega_block;  // n x n positive semidefinite compressed projection
};

struct AtomTable {
  std::vector<Atom> entries;  // ascending by lambda

  double total_mass() const {
    double s = 0.0;
    for (const auto& a : entries) s += a.mass;
    return s;
  }
};

// Masses below this are eigenvector clusters invisible from H1 (possible only
// when the cyclicity hypothesis fails); such entries are dropped.
inline constexpr double kAtomMassFloor = 1e-12;

// Atoms of the compressed spectral measure, computed from eigenprojections of
// the assembled operator. This is the source of truth for atom locations and
// masses; boundary scanning only corroborates it.
inline AtomTable atom_table(const BlockOperator& op, const ToleranceProfile& tol = {}) {
  const Matrix b = assemble_full(op);
  const HermitianEigen eig = hermitian_eig(b, tol);
  const auto clusters = cluster_eigenvalues(eig.eigenvalues, cluster_radius(eig, tol));
  AtomTable table;
  for (const auto& c : clusters) {
    Matrix y1(op.n(), c.end - c.begin);
    for (std::size_t k = c.begin; k < c.end; ++k)
      y1.set_col(k - c.begin, eig.vectors.col(k).block(op.d0(), 0, op.n(), 1));
    Matrix omega = y1 * y1.adjoint();
    const double mass = omega.trace().real();
    if (mass <= kAtomMassFloor) continue;
    table.entries.push_back(Atom{c.value, mass, std::move(omega)});
  }
  return table;
}

struct ScanDefaults {
  static std::vector<double> ladder() {
    return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  }
  static constexpr double growth_factor = 5.0;
  static constexpr double atom_floor = 1e-6;
};

// Relative stabilization window for the atom-mass estimate eps * Im m.
inline constexpr double kScanStabilizeRel = 0.25;

// Substitute for trace Im m when the shifted system is too ill-conditioned to
// solve; large enough that growth flags still fire, finite so reports stay
// serializable.
inline constexpr double kScanClamp = 1e300;

struct SingularFlag {
  std::size_t grid_index;
  double lambda;
};

struct AtomFlag {
  std::size_t grid_index;
  double lambda;
  double estimated_mass;
};

struct ScanReport {
  std::vector<double> grid;
  std::vector<double> eps_ladder;                 // strictly decreasing
  std::vector<std::vector<double>> trace_im;      // [grid][ladder]
  std::vector<SingularFlag> flagged_singular;     // trace Im m grows along the ladder
  std::vector<AtomFlag> flagged_atoms;            // eps * Im m stabilizes above the floor
};

// Boundary behaviour of z -> trace Im M(lambda + i eps) along a descending
// eps ladder. A grid point is flagged singular when the trace grows by at
// least growth_factor per rung; it is flagged as an atom when eps * Im m
// stabilizes above atom_floor, with the stabilized value as estimated mass.
inline ScanReport boundary_scan(const BlockOperator& op, const std::vector<double>& grid,
                                const std::vector<double>& eps_ladder = ScanDefaults::ladder(),
                                const ToleranceProfile& tol = {}) {
  tol.validate();
  for (std::size_t k = 0; k < eps_ladder.size(); ++k) {
    if (!(eps_ladder[k] > 0.0)) throw InvalidInput("boundary_scan: ladder entries must be positive");
    if (k && !(eps_ladder[k] < eps_ladder[k - 1]))
      throw InvalidInput("boundary_scan: ladder must be strictly decreasing");
  }

  ScanReport report;
  report.grid = grid;
  report.eps_ladder = eps_ladder;
  report.trace_im.resize(grid.size());

  for (std::size_t g = 0; g < grid.size(); ++g) {
    auto& row = report.trace_im[g];
    row.resize(eps_ladder.size());
    for (std::size_t e = 0; e < eps_ladder.size(); ++e) {
      double value;
      try {
        value = m_schur(op, Complex(grid[g], eps_ladder[e]), tol).trace().imag();
      } catch (const SingularMatrix&) {
        value = kScanClamp;
      }
      row[e] = value;
    }
    if (eps_ladder.size() >= 2) {
      bool growing = true;
      for (std::size_t e = 0; e + 1 < eps_ladder.size() && growing; ++e)
        growing = row[e] > 0.0 && row[e + 1] >= ScanDefaults::growth_factor * row[e];
      if (growing) report.flagged_singular.push_back(SingularFlag{g, grid[g]});

      const std::size_t last = eps_ladder.size() - 1;
      const double u_last = eps_ladder[last] * row[last];
      const double u_prev = eps_ladder[last - 1] * row[last - 1];
      if (u_last > ScanDefaults::atom_floor &&
          std::abs(u_last - u_prev) <= kScanStabilizeRel * u_last)
        report.flagged_atoms.push_back(AtomFlag{g, grid[g], u_last});
    }
  }
  return report;
}

}  // namespace blockric
