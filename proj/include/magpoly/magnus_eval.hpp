#pragma once

#include <span>
#include <vector>

#include "magpoly/coeff_tensor.hpp"
#include "magpoly/lie_algebra.hpp"
#include "magpoly/polynomial.hpp"

namespace magpoly {

/// Evaluates a^[k](t, d) = sum_p sum_gamma T t^(k + sum gamma) prod d_gamma_i
/// for all orders k at once. Immutable after construction; share freely.
class PolynomialEvaluator {
 public:
  PolynomialEvaluator() = default;
  explicit PolynomialEvaluator(const CoeffTensor& tensor);

  int k_max() const noexcept { return k_max_; }
  std::size_t dim() const noexcept { return poly_.dim(); }
  int max_degree() const noexcept { return poly_.max_degree(); }

  /// Column k-1 holds the order-k slice.
  void eval_slices(double t, std::span<const double> d, RealMatrix& slices) const;
  std::vector<RealVector> eval(double t, std::span<const double> d) const;

 private:
  int k_max_ = 0;
  SparsePolynomial poly_;
};

/// Per-order coefficient slices a^[1..k_M] at (t, d).
std::vector<RealVector> eval_coeffs(const CoeffTensor& tensor, double t, std::span<const double> d);

struct EffectiveHamiltonian {
  std::vector<RealVector> slices;  // a^[k], k = 1..k_M
  RealVector a;                    // sum of the slices
  double t = 0.0;
  ComplexMatrix op;                // sum_mu a_mu L_mu
};

EffectiveHamiltonian assemble(const LieBasis& basis, std::vector<RealVector> slices, double t = 0.0);

/// exp(-i M) for an operator in the span of a Lie basis, stored as one
/// eigendecomposition per invariant block of the basis.
class Propagator {
 public:
  Propagator() = default;
  /// Uses the basis block structure; `a` are the coefficients of M.
  Propagator(const LieBasis& basis, const RealVector& a);
  /// Generic dense Hermitian M (single block).
  explicit Propagator(const ComplexMatrix& m);

  Eigen::Index dim() const noexcept { return dim_; }
  /// exp(-i M) psi
  ComplexVector apply(const ComplexVector& psi) const;
  /// exp(+i M) psi
  ComplexVector apply_adjoint(const ComplexVector& psi) const;
  ComplexMatrix matrix() const;

 private:
  struct Block {
    std::vector<Eigen::Index> index;
    ComplexMatrix vectors;
    ComplexVector phases;  // exp(-i lambda)
  };
  void add_block(std::vector<Eigen::Index> index, const ComplexMatrix& m);
  ComplexVector apply_impl(const ComplexVector& psi, bool adjoint) const;

  Eigen::Index dim_ = 0;
  std::vector<Block> blocks_;
};

/// exp(-i M) psi via a dense eigendecomposition of M.
ComplexVector propagate(const EffectiveHamiltonian& m, const ComplexVector& psi);

/// eps_M = sqrt(sum_mu (a_mu * ||L_mu||_1)^2) over the top-order slice.
double truncation_error(const RealVector& top_slice, const RealVector& l1_norms);

struct ConvergenceCheck {
  double bound = 0.0;  // integral of ||H(s)||_2 over [0, t]
  bool ok = false;     // bound < pi
};

/// d(s) = sum_gamma d_gamma s^gamma / gamma!
double control_value(std::span<const double> d, double s);

ConvergenceCheck check_convergence(const ComplexMatrix& a, const ComplexMatrix& b, double t,
                                   std::span<const double> d);

}  // namespace magpoly
