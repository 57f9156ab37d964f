#include "magpoly/magnus_eval.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

namespace magpoly {

PolynomialEvaluator::PolynomialEvaluator(const CoeffTensor& tensor) : k_max_(tensor.params.k_max) {
  std::vector<SparsePolynomial::Term> terms;
  terms.reserve(tensor.entries.size());
  for (const auto& e : tensor.entries) {
    std::uint32_t power = e.key.k;
    for (auto g : e.key.gamma) power += g;
    terms.push_back({static_cast<std::uint32_t>(e.key.k - 1), power, e.key.gamma, e.key.mu, e.value});
  }
  poly_ = SparsePolynomial(std::move(terms), tensor.dim_g, static_cast<std::size_t>(k_max_),
                           tensor.params.m);
}

void PolynomialEvaluator::eval_slices(double t, std::span<const double> d, RealMatrix& slices) const {
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("evaluation time must be positive");
  poly_.evaluate(t, d, slices);
}

std::vector<RealVector> PolynomialEvaluator::eval(double t, std::span<const double> d) const {
  RealMatrix s;
  eval_slices(t, d, s);
  std::vector<RealVector> out;
  out.reserve(static_cast<std::size_t>(k_max_));
  for (int k = 0; k < k_max_; ++k) out.emplace_back(s.col(k));
  return out;
}

std::vector<RealVector> eval_coeffs(const CoeffTensor& tensor, double t, std::span<const double> d) {
  return PolynomialEvaluator(tensor).eval(t, d);
}

EffectiveHamiltonian assemble(const LieBasis& basis, std::vector<RealVector> slices, double t) {
  EffectiveHamiltonian h;
  h.t = t;
  h.a = RealVector::Zero(static_cast<Eigen::Index>(basis.size()));
  for (const auto& s : slices) {
    if (s.size() != h.a.size()) throw ValidationError("coefficient slice length does not match basis");
    h.a += s;
  }
  h.slices = std::move(slices);
  h.op = assemble_operator(basis, h.a);
  return h;
}

Propagator::Propagator(const LieBasis& basis, const RealVector& a) : dim_(basis.hilbert_dim()) {
  if (a.size() != static_cast<Eigen::Index>(basis.size()))
    throw ValidationError("coefficient length does not match basis");
  if (!a.allFinite()) throw NumericError("non-finite effective Hamiltonian");
  const auto& bs = basis.blocks;
  std::vector<ComplexMatrix> local(bs.blocks.size());
  for (std::size_t b = 0; b < bs.blocks.size(); ++b) {
    const auto n = static_cast<Eigen::Index>(bs.blocks[b].size());
    local[b] = ComplexMatrix::Zero(n, n);
  }
  for (std::size_t mu = 0; mu < basis.size(); ++mu) {
    if (a[static_cast<Eigen::Index>(mu)] == 0.0) continue;
    const SparseOperator& s = basis.sparse[mu];
    for (Eigen::Index r = 0; r < s.outerSize(); ++r)
      for (SparseOperator::InnerIterator it(s, r); it; ++it)
        local[bs.block_of[it.row()]](bs.local_of[it.row()], bs.local_of[it.col()]) +=
            a[static_cast<Eigen::Index>(mu)] * it.value();
  }
  for (std::size_t b = 0; b < bs.blocks.size(); ++b) add_block(bs.blocks[b], local[b]);
}

Propagator::Propagator(const ComplexMatrix& m) : dim_(m.rows()) {
  if (m.rows() != m.cols()) throw ValidationError("operator must be square");
  if (!m.allFinite()) throw NumericError("non-finite effective Hamiltonian");
  std::vector<Eigen::Index> index(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) index[i] = i;
  add_block(std::move(index), m);
}

void Propagator::add_block(std::vector<Eigen::Index> index, const ComplexMatrix& m) {
  Block blk;
  blk.index = std::move(index);
  if (m.rows() == 1) {
    blk.vectors = ComplexMatrix::Identity(1, 1);
    blk.phases = ComplexVector::Constant(1, std::exp(cplx(0.0, -m(0, 0).real())));
  } else {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    blk.vectors = es.eigenvectors();
    blk.phases = es.eigenvalues().unaryExpr([](double l) { return std::exp(cplx(0.0, -l)); });
  }
  blocks_.push_back(std::move(blk));
}

ComplexVector Propagator::apply_impl(const ComplexVector& psi, bool adjoint) const {
  if (psi.size() != dim_) throw ValidationError("state dimension does not match propagator");
  ComplexVector out(dim_);
  for (const Block& blk : blocks_) {
    const auto n = static_cast<Eigen::Index>(blk.index.size());
    if (n == 1) {
      const cplx ph = adjoint ? std::conj(blk.phases[0]) : blk.phases[0];
      out[blk.index[0]] = ph * psi[blk.index[0]];
      continue;
    }
    ComplexVector local(n);
    for (Eigen::Index i = 0; i < n; ++i) local[i] = psi[blk.index[i]];
    ComplexVector c = blk.vectors.adjoint() * local;
    if (adjoint)
      c = c.cwiseProduct(blk.phases.conjugate()).eval();
    else
      c = c.cwiseProduct(blk.phases).eval();
    local.noalias() = blk.vectors * c;
    for (Eigen::Index i = 0; i < n; ++i) out[blk.index[i]] = local[i];
  }
  return out;
}

ComplexVector Propagator::apply(const ComplexVector& psi) const { return apply_impl(psi, false); }

ComplexVector Propagator::apply_adjoint(const ComplexVector& psi) const {
  return apply_impl(psi, true);
}

ComplexMatrix Propagator::matrix() const {
  ComplexMatrix u = ComplexMatrix::Zero(dim_, dim_);
  for (const Block& blk : blocks_) {
    const ComplexMatrix local = blk.vectors * blk.phases.asDiagonal() * blk.vectors.adjoint();
    const auto n = static_cast<Eigen::Index>(blk.index.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) u(blk.index[i], blk.index[j]) = local(i, j);
  }
  return u;
}

ComplexVector propagate(const EffectiveHamiltonian& m, const ComplexVector& psi) {
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > 1e-10) throw ValidationError("state must be normalized");
  return Propagator(m.op).apply(psi);
}

double truncation_error(const RealVector& top_slice, const RealVector& l1_norms) {
  if (top_slice.size() != l1_norms.size()) throw ValidationError("length mismatch");
  return top_slice.cwiseProduct(l1_norms).norm();
}

double control_value(std::span<const double> d, double s) {
  double v = 0.0, term = 1.0;
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (g > 0) term *= s / static_cast<double>(g);
    v += d[g] * term;
  }
  return v;
}

ConvergenceCheck check_convergence(const ComplexMatrix& a, const ComplexMatrix& b, double t,
                                   std::span<const double> d) {
  using Rule = boost::math::quadrature::gauss<double, 64>;
  auto norm_at = [&](double s) {
    return spectral_norm_hermitian(a + control_value(d, s) * b);
  };
  auto composite = [&](int panels) {
    double total = 0.0;
    const double h = t / panels;
    for (int p = 0; p < panels; ++p) total += Rule::integrate(norm_at, p * h, (p + 1) * h);
    return total;
  };
  ConvergenceCheck out;
  if (t <= 0.0) {
    out.ok = true;
    return out;
  }
  double prev = composite(1);
  for (int panels = 2; panels <= 1024; panels *= 2) {
    const double cur = composite(panels);
    const bool settled = std::abs(cur - prev) <= 1e-8 * std::abs(cur);
    prev = cur;
    if (settled) break;
  }
  out.bound = prev;
  out.ok = prev < std::numbers::pi;
  return out;
}

}  // namespace magpoly
