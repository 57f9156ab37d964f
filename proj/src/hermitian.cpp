#include "magpoly/hermitian.hpp"

#include <Eigen/Eigenvalues>

namespace magpoly {

HermitianOperator::HermitianOperator(ComplexMatrix m, double tol) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) {
    throw ValidationError("operator must be a non-empty square matrix");
  }
  if (!m_.allFinite()) throw ValidationError("operator has non-finite entries");
  const double defect = hermiticity_defect(m_);
  if (defect > tol) {
    throw ValidationError("operator is not Hermitian (defect " + std::to_string(defect) + ")");
  }
}

HermitianOperator HermitianOperator::trusted(ComplexMatrix m) {
  HermitianOperator h;
  h.m_ = std::move(m);
  return h;
}

double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double l1_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

double spectral_norm_hermitian(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

ComplexMatrix hermitian_bracket(const ComplexMatrix& x, const ComplexMatrix& y) {
  ComplexMatrix c = x * y;
  c -= y * x;
  return cplx(0.0, -1.0) * c;
}

cplx hs_inner(const ComplexMatrix& x, const ComplexMatrix& y) {
  return (x.conjugate().cwiseProduct(y)).sum();
}

}  // namespace magpoly
