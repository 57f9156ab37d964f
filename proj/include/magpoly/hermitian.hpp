#pragma once

#include "magpoly/common.hpp"

namespace magpoly {

/// Dense Hermitian matrix. Construction validates Hermiticity entrywise.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(ComplexMatrix m, double tol = 1e-12);

  /// Skips validation; the caller guarantees Hermiticity (e.g. a real linear
  /// combination of Hermitian matrices).
  static HermitianOperator trusted(ComplexMatrix m);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

 private:
  ComplexMatrix m_;
};

/// max_{ij} |M_ij - conj(M_ji)|
double hermiticity_defect(const ComplexMatrix& m);

/// Maximum absolute column sum.
double l1_norm(const ComplexMatrix& m);

/// Largest singular value; for Hermitian input this is max |eigenvalue|.
double spectral_norm_hermitian(const ComplexMatrix& m);

/// -i [x, y]: maps Hermitian pairs to a Hermitian matrix.
ComplexMatrix hermitian_bracket(const ComplexMatrix& x, const ComplexMatrix& y);

/// Tr(x^dagger y)
cplx hs_inner(const ComplexMatrix& x, const ComplexMatrix& y);

}  // namespace magpoly
