#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "magpoly/magnus_eval.hpp"
#include "magpoly/models.hpp"
#include "test_util.hpp"

using namespace magpoly;
using namespace magpoly::testing;

namespace {

ComplexMatrix kron(const ComplexMatrix& x, const ComplexMatrix& y) {
  ComplexMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

}  // namespace

TEST(Models, RydbergSingleAtom) {
  const Model m = build_model({ModelKind::rydberg, 1});
  ComplexMatrix a(3, 3), b(3, 3);
  a << 0.5, 0, 0, 0, 0, 0.5, 0, 0.5, 0;
  b << 0.5, 0, 0, 0, 0.5, 0, 0, 0, -0.5;
  EXPECT_EQ(m.a.matrix(), a);
  EXPECT_EQ(m.b.matrix(), b);
}

TEST(Models, RydbergTwoAtomsHandBuilt) {
  // levels 0, 1, r; index = 3 * first + second
  ComplexMatrix a = ComplexMatrix::Zero(9, 9), b = ComplexMatrix::Zero(9, 9);
  const double zdiag[3] = {1, 1, -1};
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) b(3 * p + q, 3 * p + q) = 0.5 * (zdiag[p] + zdiag[q]);
  // atom acting while the other is not in r: X maps 0->0, 1<->r
  auto x_image = [](int lv) { return lv == 0 ? 0 : (lv == 1 ? 2 : 1); };
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      if (q != 2) a(3 * x_image(p) + q, 3 * p + q) += 0.5;
      if (p != 2) a(3 * p + x_image(q), 3 * p + q) += 0.5;
    }
  const Model m = build_model({ModelKind::rydberg, 2});
  EXPECT_LE((m.a.matrix() - a).norm(), 1e-15);
  EXPECT_LE((m.b.matrix() - b).norm(), 1e-15);
}

TEST(Models, IsingVariants) {
  const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
  const Model sparse = build_model({ModelKind::sparse, 3});
  const ComplexMatrix zz = kron(kron(pauli_z(), pauli_z()), id) + kron(id, kron(pauli_z(), pauli_z()));
  EXPECT_LE((sparse.a.matrix() - zz).norm(), 1e-15);
  const ComplexMatrix xs = kron(kron(pauli_x(), id), id) + kron(kron(id, pauli_x()), id) +
                           kron(kron(id, id), pauli_x());
  EXPECT_LE((sparse.b.matrix() - xs).norm(), 1e-15);
  const Model dense = build_model({ModelKind::dense, 3});
  const ComplexMatrix z13 = kron(kron(pauli_z(), id), pauli_z());
  EXPECT_LE((dense.a.matrix() - zz - 0.5 * z13).norm(), 1e-15);
}

TEST(Models, LimitsAndNames) {
  EXPECT_THROW(build_model({ModelKind::sparse, 11}), LimitError);
  EXPECT_THROW(build_model({ModelKind::rydberg, 7}), LimitError);
  EXPECT_THROW(build_model({ModelKind::sparse, 0}), ValidationError);
  EXPECT_EQ(parse_model_kind("rydberg"), ModelKind::rydberg);
  EXPECT_EQ(to_string(ModelKind::dense), "dense");
  EXPECT_THROW(parse_model_kind("heisenberg"), ValidationError);
}

TEST(Models, PhaseGate) {
  const ComplexMatrix g = ckp_gate(2, std::numbers::pi);
  EXPECT_LE((g.diagonal() - ComplexVector((ComplexVector(4) << -1, -1, -1, 1).finished())).norm(), 1e-15);
  const ComplexMatrix g3 = ckp_gate(2, 0.4, 3);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      const cplx expect = (p == 2 || q == 2 || (p == 1 && q == 1)) ? 1.0 : std::exp(cplx(0, 0.4));
      EXPECT_LE(std::abs(g3(3 * p + q, 3 * p + q) - expect), 1e-15);
    }
  EXPECT_LE((g3 - ComplexMatrix(g3.diagonal().asDiagonal())).norm(), 0.0);
}

TEST(Models, RzMatchesSingleQubitFormula) {
  const double theta = 0.83;
  // I cos(theta/2) - i (I - 2|1><1|) sin(theta/2) on the qubit levels
  ComplexMatrix rz1 = ComplexMatrix::Identity(2, 2) * std::cos(theta / 2) -
                      cplx(0, 1) * pauli_z() * std::sin(theta / 2);
  EXPECT_LE((rz_product(2, theta) - kron(rz1, rz1)).norm(), 1e-15);
  ComplexMatrix rz3 = ComplexMatrix::Identity(3, 3);
  rz3.topLeftCorner(2, 2) = rz1;
  EXPECT_LE((rz_product(2, theta, 3) - kron(rz3, rz3)).norm(), 1e-15);
  const RealVector g = rz_generator(2, 3);
  ComplexVector diag(9);
  for (int i = 0; i < 9; ++i) diag[i] = std::exp(cplx(0, -theta * g[i]));
  EXPECT_LE((rz_product(2, theta, 3).diagonal() - diag).norm(), 1e-15);
}

TEST(Models, SymmetricStates) {
  const auto states = symmetric_basis_states(2, 3);
  ASSERT_EQ(states.size(), 3u);
  EXPECT_EQ(states[1][3], cplx(1.0));  // |1> (x) |0>
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = 0; j < states.size(); ++j)
      EXPECT_NEAR(std::abs(states[i].dot(states[j])), i == j ? 1.0 : 0.0, 1e-15);
}

TEST(Models, DynamicsKeepsTrajectoryInSymmetricSector) {
  // |11> drives only the symmetric combination of |1r> and |r1>
  const Model m = build_model({ModelKind::rydberg, 2});
  const ComplexMatrix h = m.a.matrix() + 0.7 * m.b.matrix();
  const ComplexVector psi = expm_taylor(cplx(0, -2.3) * h) * symmetric_basis_states(2, 3)[2];
  ComplexVector probe = ComplexVector::Zero(9);
  probe[3 * 1 + 2] = 1.0 / std::sqrt(2.0);
  probe[3 * 2 + 1] = -1.0 / std::sqrt(2.0);
  EXPECT_LE(std::abs(probe.dot(psi)), 1e-10);
}

TEST(Models, HaarState) {
  const ComplexVector a = haar_state(27, 5), b = haar_state(27, 5), c = haar_state(27, 6);
  EXPECT_NEAR(a.norm(), 1.0, 1e-14);
  EXPECT_EQ(a, b);
  EXPECT_GT((a - c).norm(), 1e-3);
}
