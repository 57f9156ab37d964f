#include <gtest/gtest.h>

#include "magpoly/lie_algebra.hpp"
#include "magpoly/models.hpp"
#include "test_util.hpp"

using namespace magpoly;
using namespace magpoly::testing;

namespace {

void expect_orthonormal(const LieBasis& basis) {
  for (std::size_t i = 0; i < basis.size(); ++i) {
    EXPECT_LT(hermiticity_defect(basis.elements[i]), 1e-12);
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const cplx ip = hs_inner(basis.elements[i], basis.elements[j]);
      EXPECT_NEAR(std::abs(ip), i == j ? 1.0 : 0.0, i == j ? 1e-12 : 1e-10) << i << "," << j;
    }
  }
}

}  // namespace

TEST(LieAlgebra, Su2Closure) {
  const auto basis = generate_lie_algebra(HermitianOperator(pauli_z()), HermitianOperator(pauli_x()), 3);
  ASSERT_EQ(basis.size(), 3u);
  expect_orthonormal(basis);
  EXPECT_EQ(basis.depth, (std::vector<int>{1, 1, 2}));
  EXPECT_TRUE(basis.complete);
  EXPECT_LT((assemble_operator(basis, basis.a_coeffs) - pauli_z()).norm(), 1e-10);
  EXPECT_LT((assemble_operator(basis, basis.b_coeffs) - pauli_x()).norm(), 1e-10);
}

TEST(LieAlgebra, IdenticalGeneratorsGiveOneElement) {
  const ComplexMatrix a = pauli_z() + 0.5 * pauli_x();
  const auto basis = generate_lie_algebra(HermitianOperator(a), HermitianOperator(a), 4);
  ASSERT_EQ(basis.size(), 1u);
  EXPECT_LT((basis.elements[0] - a / a.norm()).norm(), 1e-14);
  const auto sc = compute_structure_constants(basis);
  EXPECT_TRUE(sc.entries().empty());
}

TEST(LieAlgebra, SparseModelMatchesBruteForceClosure) {
  const auto model = build_model({ModelKind::sparse, 2});
  const auto basis = generate_lie_algebra(model.a, model.b, 6);
  expect_orthonormal(basis);
  EXPECT_EQ(static_cast<int>(basis.size()),
            brute_force_closure_dim(model.a.matrix(), model.b.matrix(), 6));
}

TEST(LieAlgebra, RandomGeneratorsMatchBruteForceClosure) {
  std::mt19937_64 rng(7);
  const ComplexMatrix a = random_hermitian(3, rng);
  const ComplexMatrix b = random_hermitian(3, rng);
  const auto basis = generate_lie_algebra(HermitianOperator(a), HermitianOperator(b), 5);
  expect_orthonormal(basis);
  EXPECT_EQ(static_cast<int>(basis.size()), brute_force_closure_dim(a, b, 5));
}

TEST(LieAlgebra, DepthsNonDecreasing) {
  const auto model = build_model({ModelKind::dense, 3});
  const auto basis = generate_lie_algebra(model.a, model.b, 5);
  for (std::size_t i = 1; i < basis.size(); ++i) EXPECT_LE(basis.depth[i - 1], basis.depth[i]);
}

TEST(LieAlgebra, Determinism) {
  const auto model = build_model({ModelKind::sparse, 3});
  const auto b1 = generate_lie_algebra(model.a, model.b, 6);
  const auto b2 = generate_lie_algebra(model.a, model.b, 6);
  ASSERT_EQ(b1.size(), b2.size());
  for (std::size_t i = 0; i < b1.size(); ++i) EXPECT_TRUE(b1.elements[i] == b2.elements[i]);
  const auto s1 = compute_structure_constants(b1, Execution::serial);
  const auto s2 = compute_structure_constants(b2, Execution::parallel);
  EXPECT_EQ(s1.entries(), s2.entries());
}

TEST(StructureConstants, Su2Value) {
  const auto basis = generate_lie_algebra(HermitianOperator(pauli_z()), HermitianOperator(pauli_x()), 3);
  const auto sc = compute_structure_constants(basis);
  // -i [Z/sqrt2, X/sqrt2] = sqrt2 * (Y/sqrt2), and the third element is +-Y/sqrt2.
  const double sign = hs_inner(basis.elements[2], pauli_y()).real() > 0 ? 1.0 : -1.0;
  bool found = false;
  for (const auto& e : sc.entries())
    if (e.i == 0 && e.j == 1 && e.k == 2) {
      EXPECT_NEAR(e.value, sign * std::sqrt(2.0), 1e-13);
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(StructureConstants, AntisymmetryAndReconstruction) {
  const auto model = build_model({ModelKind::rydberg, 2});
  const auto basis = generate_lie_algebra(model.a, model.b, 12);
  ASSERT_TRUE(basis.complete);
  const auto sc = compute_structure_constants(basis);
  EXPECT_TRUE(sc.closed());
  std::map<std::tuple<int, int, int>, double> table;
  for (const auto& e : sc.entries()) table[{e.i, e.j, e.k}] = e.value;
  for (const auto& [key, v] : table) {
    auto [i, j, k] = key;
    auto it = table.find({j, i, k});
    ASSERT_NE(it, table.end());
    EXPECT_EQ(it->second, -v);
  }
  const auto n = static_cast<Eigen::Index>(basis.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      RealVector ei = RealVector::Unit(n, i), ej = RealVector::Unit(n, j);
      const ComplexMatrix direct = hermitian_bracket(basis.elements[i], basis.elements[j]);
      EXPECT_LT((direct - assemble_operator(basis, sc.bracket(ei, ej))).norm(), 1e-9);
    }
}

TEST(StructureConstants, AdjointMatrixMatchesBracket) {
  std::mt19937_64 rng(3);
  const auto basis = generate_lie_algebra(HermitianOperator(random_hermitian(3, rng)),
                                          HermitianOperator(random_hermitian(3, rng)), 8);
  const auto sc = compute_structure_constants(basis);
  const auto n = static_cast<Eigen::Index>(basis.size());
  const RealVector u = RealVector::Random(n), v = RealVector::Random(n);
  EXPECT_LT((sc.adjoint_matrix(u) * v - sc.bracket(u, v)).norm(), 1e-13);
}

TEST(Projection, UnitAndLinearity) {
  const auto model = build_model({ModelKind::sparse, 3});
  const auto basis = generate_lie_algebra(model.a, model.b, 4);
  ASSERT_GE(basis.size(), 3u);
  auto p = project_onto_basis(basis.elements[1], basis);
  EXPECT_NEAR(p.coeffs[1], 1.0, 1e-14);
  EXPECT_NEAR(p.coeffs.norm(), 1.0, 1e-14);
  EXPECT_LT(p.residual_norm, 1e-13);
  p = project_onto_basis(2.0 * basis.elements[0] + 3.0 * basis.elements[2], basis);
  EXPECT_NEAR(p.coeffs[0], 2.0, 1e-13);
  EXPECT_NEAR(p.coeffs[2], 3.0, 1e-13);
  EXPECT_LE(p.residual_norm, 1e-12);
}

TEST(Projection, ResidualMatchesOrthogonalComplement) {
  std::mt19937_64 rng(11);
  const auto model = build_model({ModelKind::sparse, 2});
  const auto basis = generate_lie_algebra(model.a, model.b, 6);
  const ComplexMatrix op = random_hermitian(4, rng);
  const auto p = project_onto_basis(op, basis);
  // Independent oracle: least squares on the vectorized basis.
  const Eigen::Index nn = 16;
  Eigen::MatrixXcd v(nn, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t mu = 0; mu < basis.size(); ++mu)
    v.col(static_cast<Eigen::Index>(mu)) = Eigen::Map<const ComplexVector>(basis.elements[mu].data(), nn);
  const ComplexVector rhs = Eigen::Map<const ComplexVector>(op.data(), nn);
  const ComplexVector x = v.colPivHouseholderQr().solve(rhs);
  EXPECT_NEAR(p.residual_norm, (rhs - v * x).norm(), 1e-12);
  for (std::size_t mu = 0; mu < basis.size(); ++mu) EXPECT_NEAR(p.coeffs[mu], x[mu].real(), 1e-12);
}
