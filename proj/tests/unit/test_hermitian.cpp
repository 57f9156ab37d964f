#include <gtest/gtest.h>

#include "magpoly/hermitian.hpp"
#include "test_util.hpp"

using namespace magpoly;
using namespace magpoly::testing;

TEST(Hermitian, RejectsNonHermitian) {
  ComplexMatrix m = pauli_x();
  m(0, 1) = 2.0;
  EXPECT_THROW(HermitianOperator{m}, ValidationError);
  EXPECT_THROW(HermitianOperator{ComplexMatrix(2, 3)}, ValidationError);
  EXPECT_NO_THROW(HermitianOperator{pauli_y()});
}

TEST(Hermitian, Norms) {
  EXPECT_DOUBLE_EQ(l1_norm(pauli_x() + pauli_z()), 2.0);
  EXPECT_NEAR(spectral_norm_hermitian(pauli_x() + pauli_z()), std::sqrt(2.0), 1e-14);
}

TEST(Hermitian, BracketOfPaulis) {
  // -i [X, Y] = -i (2 i Z) = 2 Z
  EXPECT_LT((hermitian_bracket(pauli_x(), pauli_y()) - 2.0 * pauli_z()).norm(), 1e-15);
  EXPECT_NEAR(hs_inner(pauli_x(), pauli_x()).real(), 2.0, 1e-15);
}
