#pragma once

#include <span>
#include <vector>

#include "magpoly/coeff_tensor.hpp"
#include "magpoly/lie_algebra.hpp"
#include "magpoly/polynomial.hpp"

namespace magpoly {

struct ControlDerivativeEntry {
  std::uint8_t alpha = 0;
  CoeffKey key;  // (k, p, mu, gamma') with gamma' of length p - 1, sorted
  double value = 0.0;
  friend bool operator==(const ControlDerivativeEntry&, const ControlDerivativeEntry&) = default;
};

/// Reindexed copies of T for the time and control derivatives of a(t, d).
///   da/dt      = sum Ttilde t^(k - 1 + sum gamma) prod d
///   da/dd_alpha = sum D t^(k + alpha + sum gamma') prod_{gamma'} d
struct GradTensors {
  ExpansionParams params;
  std::size_t dim_g = 0;
  std::vector<CoeffEntry> ttilde;              // keys of T, values (k + sum gamma) T
  std::vector<ControlDerivativeEntry> control;  // sorted by (alpha, key)
};

GradTensors build_grad_tensors(const CoeffTensor& tensor);

/// Evaluates the full Jacobian of a = sum_k a^[k] with respect to
/// (t, d_0, ..., d_m) in one sweep: column 0 is d/dt, column 1 + alpha is
/// d/dd_alpha.
class GradientEvaluator {
 public:
  GradientEvaluator() = default;
  explicit GradientEvaluator(const GradTensors& gt);

  std::size_t dim() const noexcept { return poly_.dim(); }
  int max_degree() const noexcept { return poly_.max_degree(); }
  void jacobian(double t, std::span<const double> d, RealMatrix& out) const;

 private:
  SparsePolynomial poly_;
};

RealVector d_a_dt(const GradTensors& gt, double t, std::span<const double> d);
RealVector d_a_dd(const GradTensors& gt, double t, std::span<const double> d, int alpha);

/// Coefficients r of sum_{k=0}^{k_D} (-1)^k / (k+1)! {a, .}^k (da), where
/// {x, y} is the Hermitian bracket. Then dU = -i U sum_mu r_mu L_mu.
RealVector adjoint_series(const StructureConstants& sc, const RealVector& a, const RealVector& da,
                          int k_d);

/// Dense version of the same series: sum i^k / (k+1)! ad_M^k (dM).
ComplexMatrix adjoint_series_dense(const ComplexMatrix& m, const ComplexMatrix& dm, int k_d);

/// dU for U = exp(-i M) under the truncated adjoint series, from dense operators.
ComplexMatrix propagator_derivative(const ComplexMatrix& m, const ComplexMatrix& dm, int k_d);

/// Same with M = sum a_mu L_mu and dM = sum da_mu L_mu. Uses structure
/// constants when they are closed, dense commutators otherwise.
ComplexMatrix propagator_derivative(const LieBasis& basis, const StructureConstants& sc,
                                    const RealVector& a, const RealVector& da, int k_d);

}  // namespace magpoly
