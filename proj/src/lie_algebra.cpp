#include "magpoly/lie_algebra.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <sstream>

namespace magpoly {
namespace {

constexpr double kPruneTol = 1e-14;
constexpr double kClosureTol = 1e-8;
constexpr double kDropTol = 1e-12;

SparseOperator to_sparse(const ComplexMatrix& m) {
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != cplx(0.0)) trips.emplace_back(r, c, m(r, c));
  SparseOperator s(m.rows(), m.cols());
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

ComplexMatrix sparse_bracket_dense(const SparseOperator& x, const SparseOperator& y) {
  SparseOperator c = x * y;
  c -= SparseOperator(y * x);
  return cplx(0.0, -1.0) * ComplexMatrix(c);
}

// Zeroes round-off entries so that the sparsity pattern (and with it the
// block structure) reflects the exact algebra.
void clean(ComplexMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      cplx& z = m(r, c);
      double re = std::abs(z.real()) <= kPruneTol ? 0.0 : z.real();
      double im = std::abs(z.imag()) <= kPruneTol ? 0.0 : z.imag();
      z = cplx(re, im);
    }
}

struct UnionFind {
  std::vector<Eigen::Index> parent;
  explicit UnionFind(Eigen::Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  }
  Eigen::Index find(Eigen::Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(Eigen::Index a, Eigen::Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

int LieBasis::closure_depth() const noexcept { return complete ? INT_MAX : max_depth; }

void LieBasis::finalize() {
  sparse.clear();
  sparse.reserve(elements.size());
  for (const auto& e : elements) sparse.push_back(to_sparse(e));

  const Eigen::Index n = hilbert_dim();
  UnionFind uf(n);
  for (const auto& s : sparse)
    for (Eigen::Index r = 0; r < s.outerSize(); ++r)
      for (SparseOperator::InnerIterator it(s, r); it; ++it) uf.unite(it.row(), it.col());

  blocks = BlockStructure{};
  blocks.block_of.assign(static_cast<std::size_t>(n), -1);
  blocks.local_of.assign(static_cast<std::size_t>(n), -1);
  std::vector<std::int32_t> root_block(static_cast<std::size_t>(n), -1);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Index root = uf.find(s);
    if (root_block[root] < 0) {
      root_block[root] = static_cast<std::int32_t>(blocks.blocks.size());
      blocks.blocks.emplace_back();
    }
    auto& blk = blocks.blocks[root_block[root]];
    blocks.block_of[s] = root_block[root];
    blocks.local_of[s] = static_cast<std::int32_t>(blk.size());
    blk.push_back(s);
  }
}

LieBasis generate_lie_algebra(const HermitianOperator& a, const HermitianOperator& b,
                              int max_depth, double eps_l) {
  if (a.dim() != b.dim()) throw ValidationError("generators have different dimensions");
  if (max_depth < 1) throw ValidationError("max_depth must be at least 1");
  if (!(eps_l > 0.0)) throw ValidationError("eps_L must be positive");

  const double cutoff = eps_l * std::min(l1_norm(a.matrix()), l1_norm(b.matrix()));

  LieBasis basis;
  basis.max_depth = max_depth;

  auto try_add = [&](ComplexMatrix cand, int depth) {
    const double raw = l1_norm(cand);
    if (raw == 0.0) return false;
    // Modified Gram-Schmidt, applied twice.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& l : basis.elements) cand -= hs_inner(l, cand).real() * l;
    if (l1_norm(cand) < std::max(cutoff, 1e-10 * raw)) return false;
    cand = 0.5 * (cand + cand.adjoint()).eval();
    cand /= cand.norm();
    clean(cand);
    cand /= cand.norm();
    basis.elements.push_back(std::move(cand));
    basis.depth.push_back(depth);
    return true;
  };

  const SparseOperator sa = to_sparse(a.matrix());
  const SparseOperator sb = to_sparse(b.matrix());

  std::vector<std::size_t> last;
  if (try_add(a.matrix(), 1)) last.push_back(basis.size() - 1);
  if (try_add(b.matrix(), 1)) last.push_back(basis.size() - 1);

  for (int depth = 2; depth <= max_depth; ++depth) {
    std::vector<std::size_t> fresh;
    for (const SparseOperator* g : {&sa, &sb}) {
      for (std::size_t idx : last) {
        const SparseOperator lb = to_sparse(basis.elements[idx]);
        if (try_add(sparse_bracket_dense(*g, lb), depth)) fresh.push_back(basis.size() - 1);
      }
    }
    if (fresh.empty()) {
      basis.complete = true;
      break;
    }
    last = std::move(fresh);
  }
  if (!basis.complete && !last.empty()) {
    // Probe one more sweep: if nothing new would appear the basis is complete.
    bool grows = false;
    for (const SparseOperator* g : {&sa, &sb}) {
      for (std::size_t idx : last) {
        ComplexMatrix cand = sparse_bracket_dense(*g, to_sparse(basis.elements[idx]));
        const double raw = l1_norm(cand);
        if (raw == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& l : basis.elements) cand -= hs_inner(l, cand).real() * l;
        if (l1_norm(cand) >= std::max(cutoff, 1e-10 * raw)) grows = true;
      }
    }
    basis.complete = !grows;
  }

  basis.l1_norms.resize(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) basis.l1_norms[i] = l1_norm(basis.elements[i]);
  basis.finalize();
  basis.a_coeffs = project_onto_basis(a.matrix(), basis).coeffs;
  basis.b_coeffs = project_onto_basis(b.matrix(), basis).coeffs;
  return basis;
}

Projection project_onto_basis(const ComplexMatrix& op, const LieBasis& basis) {
  if (basis.size() > 0 && (op.rows() != basis.hilbert_dim() || op.cols() != basis.hilbert_dim()))
    throw ValidationError("operator dimension does not match the basis");
  Projection p;
  p.coeffs = RealVector::Zero(static_cast<Eigen::Index>(basis.size()));
  ComplexMatrix residual = op;
  for (std::size_t mu = 0; mu < basis.size(); ++mu) {
    p.coeffs[mu] = hs_inner(basis.elements[mu], op).real();
    residual -= p.coeffs[mu] * basis.elements[mu];
  }
  p.residual_norm = residual.norm();
  return p;
}

ComplexMatrix assemble_operator(const LieBasis& basis, const RealVector& coeffs) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.size())
    throw ValidationError("coefficient vector length does not match the basis");
  const Eigen::Index n = basis.hilbert_dim();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (std::size_t mu = 0; mu < basis.size(); ++mu) {
    if (coeffs[mu] == 0.0) continue;
    const auto& s = basis.sparse[mu];
    for (Eigen::Index r = 0; r < s.outerSize(); ++r)
      for (SparseOperator::InnerIterator it(s, r); it; ++it)
        out(it.row(), it.col()) += coeffs[mu] * it.value();
  }
  return out;
}

StructureConstants::StructureConstants(std::size_t dim_g, std::vector<StructureEntry> entries,
                                       bool closed)
    : dim_g_(dim_g), entries_(std::move(entries)), closed_(closed) {
  std::sort(entries_.begin(), entries_.end(), [](const auto& x, const auto& y) {
    return std::tie(x.i, x.j, x.k) < std::tie(y.i, y.j, y.k);
  });
  row_start_.assign(dim_g_ + 1, 0);
  for (const auto& e : entries_) {
    if (e.i >= dim_g_ || e.j >= dim_g_ || e.k >= dim_g_)
      throw ValidationError("structure constant index out of range");
    ++row_start_[e.i + 1];
  }
  std::partial_sum(row_start_.begin(), row_start_.end(), row_start_.begin());
}

void StructureConstants::bracket_into(const double* u, const double* v, double* out) const {
  for (std::size_t i = 0; i < dim_g_; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    for (std::size_t n = row_start_[i]; n < row_start_[i + 1]; ++n) {
      const auto& e = entries_[n];
      out[e.k] += e.value * ui * v[e.j];
    }
  }
}

RealVector StructureConstants::bracket(const RealVector& u, const RealVector& v) const {
  if (static_cast<std::size_t>(u.size()) != dim_g_ || static_cast<std::size_t>(v.size()) != dim_g_)
    throw ValidationError("vector length does not match the structure constants");
  RealVector w = RealVector::Zero(static_cast<Eigen::Index>(dim_g_));
  bracket_into(u.data(), v.data(), w.data());
  return w;
}

RealMatrix StructureConstants::adjoint_matrix(const RealVector& u) const {
  if (static_cast<std::size_t>(u.size()) != dim_g_)
    throw ValidationError("vector length does not match the structure constants");
  const auto n = static_cast<Eigen::Index>(dim_g_);
  RealMatrix m = RealMatrix::Zero(n, n);
  for (const auto& e : entries_) m(e.k, e.j) += e.value * u[e.i];
  return m;
}

StructureConstants compute_structure_constants(const LieBasis& basis, Execution exec) {
  const std::size_t d = basis.size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < d; ++i)
    for (std::uint32_t j = i + 1; j < d; ++j) pairs.emplace_back(i, j);

  struct PairResult {
    std::vector<std::pair<std::uint32_t, double>> coeffs;
    double residual = 0.0;
  };
  std::vector<PairResult> results(pairs.size());

  auto work = [&](std::size_t n) {
    const auto [i, j] = pairs[n];
    SparseOperator c = basis.sparse[i] * basis.sparse[j];
    c -= SparseOperator(basis.sparse[j] * basis.sparse[i]);
    c *= cplx(0.0, -1.0);
    SparseOperator residual = c;
    for (std::uint32_t k = 0; k < d; ++k) {
      const double ck = basis.sparse[k].conjugate().cwiseProduct(c).sum().real();
      if (std::abs(ck) < kDropTol) continue;
      results[n].coeffs.emplace_back(k, ck);
      residual -= ck * basis.sparse[k];
    }
    results[n].residual = residual.norm();
  };

  const auto np = static_cast<std::ptrdiff_t>(pairs.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t n = 0; n < np; ++n) work(static_cast<std::size_t>(n));
  } else {
    for (std::ptrdiff_t n = 0; n < np; ++n) work(static_cast<std::size_t>(n));
  }

  const int horizon = basis.closure_depth();
  bool closed = true;
  std::vector<StructureEntry> entries;
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    const auto [i, j] = pairs[n];
    if (results[n].residual > kClosureTol) {
      const long depth_sum = static_cast<long>(basis.depth[i]) + basis.depth[j];
      if (depth_sum <= horizon) {
        std::ostringstream msg;
        msg << "bracket of basis elements (" << i << ", " << j << ") leaves the basis (residual "
            << results[n].residual << "); increase max_depth";
        throw ClosureError(msg.str());
      }
      closed = false;
    }
    for (const auto& [k, ck] : results[n].coeffs) {
      entries.push_back({i, j, k, ck});
      entries.push_back({j, i, k, -ck});
    }
  }
  return StructureConstants(d, std::move(entries), closed);
}

}  // namespace magpoly
