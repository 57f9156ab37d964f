#include "magpoly/magnus_grad.hpp"

#include <algorithm>
#include <map>

#include "magpoly/magnus_eval.hpp"

namespace magpoly {
namespace {

int gamma_sum(const GammaTuple& g) {
  int s = 0;
  for (auto x : g) s += x;
  return s;
}

}  // namespace

GradTensors build_grad_tensors(const CoeffTensor& tensor) {
  GradTensors gt;
  gt.params = tensor.params;
  gt.dim_g = tensor.dim_g;
  std::map<std::pair<std::uint8_t, CoeffKey>, double> control;
  for (const auto& e : tensor.entries) {
    const int power = e.key.k + gamma_sum(e.key.gamma);
    gt.ttilde.push_back({e.key, power * e.value});
    // d/dd_alpha of prod d_gamma_i = mult(alpha) * prod over gamma with one alpha removed.
    const auto& g = e.key.gamma;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i > 0 && g[i] == g[i - 1]) continue;
      const auto mult = std::count(g.begin(), g.end(), g[i]);
      CoeffKey reduced = e.key;
      reduced.gamma.erase(reduced.gamma.begin() + static_cast<std::ptrdiff_t>(i));
      control[{g[i], reduced}] += static_cast<double>(mult) * e.value;
    }
  }
  for (auto& [key, value] : control) gt.control.push_back({key.first, key.second, value});
  return gt;
}

GradientEvaluator::GradientEvaluator(const GradTensors& gt) {
  std::vector<SparsePolynomial::Term> terms;
  terms.reserve(gt.ttilde.size() + gt.control.size());
  for (const auto& e : gt.ttilde) {
    const int power = e.key.k - 1 + gamma_sum(e.key.gamma);
    terms.push_back({0, static_cast<std::uint32_t>(power), e.key.gamma, e.key.mu, e.value});
  }
  for (const auto& e : gt.control) {
    const int power = e.key.k + e.alpha + gamma_sum(e.key.gamma);
    terms.push_back({1u + e.alpha, static_cast<std::uint32_t>(power), e.key.gamma, e.key.mu, e.value});
  }
  poly_ = SparsePolynomial(std::move(terms), gt.dim_g, static_cast<std::size_t>(gt.params.m) + 2,
                           gt.params.m);
}

void GradientEvaluator::jacobian(double t, std::span<const double> d, RealMatrix& out) const {
  if (!(t > 0.0)) throw ValidationError("evaluation time must be positive");
  poly_.evaluate(t, d, out);
}

RealVector d_a_dt(const GradTensors& gt, double t, std::span<const double> d) {
  RealMatrix j;
  GradientEvaluator(gt).jacobian(t, d, j);
  return j.col(0);
}

RealVector d_a_dd(const GradTensors& gt, double t, std::span<const double> d, int alpha) {
  if (alpha < 0 || alpha > gt.params.m) throw ValidationError("control index out of range");
  RealMatrix j;
  GradientEvaluator(gt).jacobian(t, d, j);
  return j.col(1 + alpha);
}

RealVector adjoint_series(const StructureConstants& sc, const RealVector& a, const RealVector& da,
                          int k_d) {
  if (k_d < 0) throw ValidationError("k_D must be non-negative");
  const RealMatrix ad = sc.adjoint_matrix(a);
  RealVector term = da;
  RealVector out = da;
  double coeff = 1.0;
  for (int k = 1; k <= k_d; ++k) {
    term = ad * term;
    coeff *= -1.0 / (k + 1);
    out += coeff * term;
  }
  return out;
}

ComplexMatrix adjoint_series_dense(const ComplexMatrix& m, const ComplexMatrix& dm, int k_d) {
  if (k_d < 0) throw ValidationError("k_D must be non-negative");
  ComplexMatrix term = dm;
  ComplexMatrix out = dm;
  cplx coeff = 1.0;
  for (int k = 1; k <= k_d; ++k) {
    term = (m * term - term * m).eval();
    coeff *= cplx(0.0, 1.0) / static_cast<double>(k + 1);
    out += coeff * term;
  }
  return out;
}

ComplexMatrix propagator_derivative(const ComplexMatrix& m, const ComplexMatrix& dm, int k_d) {
  if (m.rows() != dm.rows() || m.cols() != dm.cols()) throw ValidationError("dimension mismatch");
  const ComplexMatrix u = Propagator(m).matrix();
  return cplx(0.0, -1.0) * u * adjoint_series_dense(m, dm, k_d);
}

ComplexMatrix propagator_derivative(const LieBasis& basis, const StructureConstants& sc,
                                    const RealVector& a, const RealVector& da, int k_d) {
  const ComplexMatrix u = Propagator(basis, a).matrix();
  if (!sc.closed()) {
    const ComplexMatrix series =
        adjoint_series_dense(assemble_operator(basis, a), assemble_operator(basis, da), k_d);
    return cplx(0.0, -1.0) * u * series;
  }
  return cplx(0.0, -1.0) * u * assemble_operator(basis, adjoint_series(sc, a, da, k_d));
}

}  // namespace magpoly
