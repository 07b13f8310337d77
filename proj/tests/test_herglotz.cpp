#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace blockric;
using namespace testsupport;

namespace {

// Gauss-Jordan inverse, independent of the library solver.
Matrix plain_inverse(Matrix m) {
  const std::size_t dim = m.rows();
  Matrix inv = Matrix::identity(dim);
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < dim; ++row)
      if (std::abs(m(row, col)) > std::abs(m(pivot, col))) pivot = row;
    REQUIRE(std::abs(m(pivot, col)) > 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      std::swap(m(pivot, k), m(col, k));
      std::swap(inv(pivot, k), inv(col, k));
    }
    const Complex lead = m(col, col);
    for (std::size_t k = 0; k < dim; ++k) {
      m(col, k) /= lead;
      inv(col, k) /= lead;
    }
    for (std::size_t row = 0; row < dim; ++row) {
      if (row == col) continue;
      const Complex factor = m(row, col);
      for (std::size_t k = 0; k < dim; ++k) {
        m(row, k) -= factor * m(col, k);
        inv(row, k) -= factor * inv(col, k);
      }
    }
  }
  return inv;
}

Matrix imaginary_part(const Matrix& m) {
  return (m - m.adjoint()) * Complex(0.0, -0.5);
}

}  // namespace

TEST_CASE("m_schur matches a hand-rolled resolvent compression") {
  const BlockOperator op = mixed_op();
  const Complex z(0.3, 0.7);
  const Matrix full = assemble_full(op);
  const Matrix inv = plain_inverse(full - Matrix::identity(4) * z);
  Matrix compressed(2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) compressed(i, j) = inv(2 + i, 2 + j);
  CHECK(matrix_close(m_schur(op, z), compressed, 1e-12));
  CHECK(matrix_close(m_resolvent(op, z), compressed, 1e-12));
}

TEST_CASE("resolvent and Schur forms agree on random operators") {
  TestRng rng(909);
  for (int trial = 0; trial < 30; ++trial) {
    const BlockOperator op = random_block_operator(rng, 1 + rng.index(5), 1 + rng.index(3));
    const Complex z(rng.uniform(-3.0, 3.0), rng.uniform(1e-3, 10.0));
    const Matrix a = m_resolvent(op, z);
    const Matrix b = m_schur(op, z);
    CHECK((a - b).frobenius_norm() <= 1e-9 * a.frobenius_norm());
  }
}

TEST_CASE("scalar closed forms") {
  // a0=-1, a1=1, v=1: m(z) = 1 / ((1-z) - 1/(-1-z)).
  const BlockOperator scalar = scalar_op();
  for (Complex z : {Complex(0.0, 1.0), Complex(0.0, 2.0), Complex(0.3, 0.7)}) {
    const Complex expected = 1.0 / ((1.0 - z) - 1.0 / (-1.0 - z));
    CHECK(std::abs(m_schur(scalar, z)(0, 0) - expected) <= 1e-12);
  }
  // a0=a1=0, v=1: m(z) = z / (1 - z^2), so m(i) = i/2.
  const BlockOperator flat = flat_op();
  CHECK(std::abs(m_schur(flat, Complex(0.0, 1.0))(0, 0) - Complex(0.0, 0.5)) <= 1e-12);
}

TEST_CASE("imaginary part is positive semidefinite in the upper half-plane") {
  TestRng rng(1010);
  for (int trial = 0; trial < 30; ++trial) {
    const BlockOperator op = random_block_operator(rng, 1 + rng.index(5), 1 + rng.index(3));
    const Complex z(rng.uniform(-3.0, 3.0), rng.uniform(1e-3, 10.0));
    const HermitianEigen eig = hermitian_eig(imaginary_part(m_schur(op, z)));
    CHECK(eig.eigenvalues.front() >= -1e-12);
  }
}

TEST_CASE("herglotz_sample records the trace") {
  const HerglotzSample sample = herglotz_sample(mixed_op(), Complex(0.0, 1.0));
  Complex trace(0.0, 0.0);
  for (std::size_t i = 0; i < 2; ++i) trace += sample.m(i, i);
  CHECK(std::abs(sample.trace - trace) <= 1e-15);
  CHECK(trace.imag() > 0.0);
}

TEST_CASE("atom_table carries total mass n") {
  const AtomTable table = atom_table(mixed_op());
  REQUIRE(table.entries.size() == 4);
  CHECK(table.total_mass() == Catch::Approx(2.0).margin(1e-10));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(table.entries[i].lambda == Catch::Approx(kMixedEigenvalues[i]).margin(1e-10));
    CHECK(table.entries[i].mass > 0.0);
    CHECK(hermitian_defect(table.entries[i].omega_block) <= 1e-12);
  }
}

TEST_CASE("the measure is the sum of its atoms") {
  // Stieltjes transform of the atom table against a direct evaluation.
  TestRng rng(1111);
  for (int trial = 0; trial < 10; ++trial) {
    const BlockOperator op = random_cyclic_op(rng, 1 + rng.index(4), 1 + rng.index(3));
    const AtomTable table = atom_table(op);
    CHECK(table.total_mass() == Catch::Approx(static_cast<double>(op.n())).margin(1e-8));
    const Complex z(rng.uniform(-2.0, 2.0), rng.uniform(0.5, 2.0));
    Matrix stieltjes(op.n(), op.n());
    for (const Atom& atom : table.entries)
      stieltjes += atom.omega_block * (1.0 / (Complex(atom.lambda, 0.0) - z));
    CHECK(matrix_close(stieltjes, m_schur(op, z), 1e-8));
  }
}

TEST_CASE("boundary_scan flags atoms of the flat fixture with mass one half") {
  const BlockOperator flat = flat_op();
  const std::vector<double> grid = GridSpec{-2.0, 2.0, 401}.materialize();
  const ScanReport report = boundary_scan(flat, grid, ScanDefaults::ladder());
  REQUIRE(report.flagged_atoms.size() == 2);
  for (const AtomFlag& flag : report.flagged_atoms) {
    CHECK(std::abs(std::abs(flag.lambda) - 1.0) <= 1e-12);
    CHECK(std::abs(flag.estimated_mass - 0.5) <= 0.05 * 0.5);
  }
  // Every singular flag sits on an atom: no singular-continuous candidates.
  for (const SingularFlag& flag : report.flagged_singular) {
    bool on_atom = false;
    for (const AtomFlag& atom : report.flagged_atoms)
      if (atom.grid_index == flag.grid_index) on_atom = true;
    CHECK(on_atom);
  }
}

TEST_CASE("boundary_scan sees the mixed fixture atoms on an eigenvalue grid") {
  const BlockOperator op = mixed_op();
  const AtomTable table = atom_table(op);
  std::vector<double> grid;
  for (const Atom& atom : table.entries) grid.push_back(atom.lambda);
  const ScanReport report = boundary_scan(op, grid, ScanDefaults::ladder());
  REQUIRE(report.flagged_atoms.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(report.flagged_atoms[i].grid_index == i);
    CHECK(report.flagged_atoms[i].estimated_mass ==
          Catch::Approx(table.entries[i].mass).epsilon(1e-4));
  }
  CHECK(report.flagged_singular.size() == 4);
}

TEST_CASE("boundary_scan validates the ladder") {
  const std::vector<double> grid = {0.0};
  CHECK_THROWS_AS(boundary_scan(flat_op(), grid, {1e-3, 1e-2}), InvalidInput);
  CHECK_THROWS_AS(boundary_scan(flat_op(), grid, {1e-3, -1e-4}), InvalidInput);
}
