#include "magpoly/coeff_tensor.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "magpoly/trees.hpp"

namespace magpoly {
namespace {

constexpr double kTensorDropTol = 1e-14;
constexpr std::size_t kTreesPerChunk = 32;

std::uint64_t factorial_u64(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

/// All ordered tuples of length p with entries in [0, m] and sum <= budget,
/// in lexicographic order.
std::vector<GammaTuple> ordered_tuples(int p, int m, int budget) {
  std::vector<GammaTuple> out;
  GammaTuple cur(static_cast<std::size_t>(p), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == p) {
      out.push_back(cur);
      return;
    }
    for (int g = 0; g <= std::min(m, left); ++g) {
      cur[pos] = static_cast<std::uint8_t>(g);
      rec(pos + 1, left - g);
    }
  };
  if (budget >= 0) rec(0, budget);
  return out;
}

/// Coefficient vectors of the bracket chain for every placement of A/B on the
/// leaves of a subtree, indexed by local placement mask.
struct ChainTable {
  int leaves = 0;
  std::vector<double> data;        // (1 << leaves) * dim
  std::vector<std::uint8_t> nonzero;
};

class ChainBuilder {
 public:
  ChainBuilder(const LieBasis& basis, const StructureConstants& sc)
      : sc_(sc), dim_(static_cast<Eigen::Index>(sc.dim())), a_(basis.a_coeffs), b_(basis.b_coeffs) {
    ad_a_ = sc.adjoint_matrix(a_);
    ad_b_ = sc.adjoint_matrix(b_);
  }

  ChainTable build(const BinaryTree& t) const {
    ChainTable out;
    out.leaves = t.leaf_count();
    const std::size_t count = std::size_t{1} << out.leaves;
    out.data.assign(count * static_cast<std::size_t>(dim_), 0.0);
    out.nonzero.assign(count, 0);
    if (t.is_leaf()) {
      Eigen::Map<RealVector>(out.data.data(), dim_) = a_;
      Eigen::Map<RealVector>(out.data.data() + dim_, dim_) = b_;
      out.nonzero[0] = a_.squaredNorm() > 0.0;
      out.nonzero[1] = b_.squaredNorm() > 0.0;
      return out;
    }
    const ChainTable left = build(*t.left());
    const ChainTable right = build(*t.right());
    const bool left_leaf = t.left()->is_leaf();
    const bool right_leaf = t.right()->is_leaf();
    const int nr = right.leaves;
    for (std::size_t ml = 0; ml < (std::size_t{1} << left.leaves); ++ml) {
      if (!left.nonzero[ml]) continue;
      Eigen::Map<const RealVector> u(left.data.data() + ml * dim_, dim_);
      for (std::size_t mr = 0; mr < (std::size_t{1} << nr); ++mr) {
        if (!right.nonzero[mr]) continue;
        if (left_leaf && right_leaf && ml == mr) continue;  // [g, g] = 0
        Eigen::Map<const RealVector> v(right.data.data() + mr * dim_, dim_);
        const std::size_t mask = mr | (ml << nr);
        Eigen::Map<RealVector> w(out.data.data() + mask * dim_, dim_);
        if (left_leaf) {
          w.noalias() = (ml ? ad_b_ : ad_a_) * v;
        } else if (right_leaf) {
          w.noalias() = -((mr ? ad_b_ : ad_a_) * u);
        } else {
          sc_.bracket_into(u.data(), v.data(), w.data());
        }
        out.nonzero[mask] = w.cwiseAbs().maxCoeff() > 0.0;
      }
    }
    return out;
  }

 private:
  const StructureConstants& sc_;
  Eigen::Index dim_;
  RealVector a_, b_;
  RealMatrix ad_a_, ad_b_;
};

/// Checks on a few chains that (-i)^(k-1) times the plain nested commutator of
/// dense matrices equals the real Lie-basis chain, i.e. that the Hermitian
/// bracket absorbs every phase.
void check_phase_convention(const LieBasis& basis, const ChainBuilder& builder, int k_max) {
  if (basis.hilbert_dim() > 256) return;
  const ComplexMatrix a = assemble_operator(basis, basis.a_coeffs);
  const ComplexMatrix b = assemble_operator(basis, basis.b_coeffs);
  for (int k = 2; k <= std::min(k_max, 4); ++k) {
    for (const auto& tree : enumerate_trees(k - 1)) {
      const ChainTable table = builder.build(*tree);
      int checked = 0;
      for (std::size_t q = 0; q < table.nonzero.size() && checked < 3; ++q) {
        if (!table.nonzero[q]) continue;
        std::function<ComplexMatrix(const BinaryTree&, int)> plain = [&](const BinaryTree& t,
                                                                         int offset) {
          if (t.is_leaf()) return ComplexMatrix((q >> offset) & 1u ? b : a);
          const int nr = t.right()->leaf_count();
          ComplexMatrix x = plain(*t.left(), offset + nr);
          ComplexMatrix y = plain(*t.right(), offset);
          return ComplexMatrix(x * y - y * x);
        };
        ComplexMatrix phased = plain(*tree, 0);
        cplx phase = 1.0;
        for (int i = 1; i < k; ++i) phase *= cplx(0.0, -1.0);
        phased *= phase;
        RealVector beta = Eigen::Map<const RealVector>(
            table.data.data() + q * basis.size(), static_cast<Eigen::Index>(basis.size()));
        const double scale = std::max(1.0, phased.norm());
        const double imag_residue = (phased - phased.adjoint()).norm() / scale;
        const double mismatch = (phased - assemble_operator(basis, beta)).norm() / scale;
        if (imag_residue > 1e-10 || mismatch > 1e-10)
          throw ConventionError("Hermitian bracket convention check failed at order " +
                                std::to_string(k));
        ++checked;
      }
    }
  }
}

}  // namespace

void validate(const ExpansionParams& params) {
  if (params.k_max < 1 || params.k_max > kMaxTreeOrder + 1)
    throw LimitError("k_M must lie in [1, " + std::to_string(kMaxTreeOrder + 1) + "]");
  if (params.gamma_max < params.k_max) throw ValidationError("Gamma must be at least k_M");
  if (params.gamma_max > 255) throw LimitError("Gamma too large");
  if (params.m < 0 || params.m > 255) throw ValidationError("control degree m out of range");
}

bool key_admissible(const CoeffKey& key, const ExpansionParams& params, bool sorted) {
  if (key.k < 1 || key.k > params.k_max) return false;
  if (key.p > key.k || key.gamma.size() != key.p) return false;
  int sum = key.k;
  for (std::size_t i = 0; i < key.gamma.size(); ++i) {
    if (key.gamma[i] > params.m) return false;
    if (sorted && i + 1 < key.gamma.size() && key.gamma[i] > key.gamma[i + 1]) return false;
    sum += key.gamma[i];
  }
  return sum <= params.gamma_max;
}

STensor compute_S(const LieBasis& basis, const StructureConstants& sc,
                  const ExpansionParams& params, Execution exec) {
  validate(params);
  if (basis.closure_depth() < params.k_max)
    throw ClosureError("Lie basis depth " + std::to_string(basis.max_depth) +
                       " is below the expansion order " + std::to_string(params.k_max));
  if (sc.dim() != basis.size()) throw ValidationError("structure constants do not match the basis");

  const auto dim = static_cast<std::size_t>(basis.size());
  const ChainBuilder builder(basis, sc);
  check_phase_convention(basis, builder, params.k_max);

  STensor out;
  out.params = params;
  out.dim_g = dim;

  for (int k = 1; k <= params.k_max; ++k) {
    // Admissible ordered exponent tuples per p, with their slot offsets.
    std::vector<std::vector<GammaTuple>> tuples(static_cast<std::size_t>(k) + 1);
    std::vector<std::vector<std::uint64_t>> fact(tuples.size());
    std::vector<std::size_t> slot_offset(tuples.size() + 1, 0);
    for (int p = 0; p <= k; ++p) {
      tuples[p] = ordered_tuples(p, params.m, params.gamma_max - k);
      for (const auto& g : tuples[p]) {
        std::uint64_t f = 1;
        for (auto gi : g) f *= factorial_u64(gi);
        fact[p].push_back(f);
      }
      slot_offset[p + 1] = slot_offset[p] + tuples[p].size();
    }
    const std::size_t slots = slot_offset.back();

    std::vector<CompiledTree> trees;
    for (const auto& t : enumerate_trees(k - 1)) {
      CompiledTree ct(t);
      if (ct.weight_num != 0) trees.push_back(std::move(ct));
    }

    const std::size_t n_chunks = (trees.size() + kTreesPerChunk - 1) / kTreesPerChunk;
    std::vector<std::vector<double>> chunk_acc(n_chunks);

    auto run_chunk = [&](std::size_t c) {
      std::vector<double>& acc = chunk_acc[c];
      acc.assign(slots * dim, 0.0);
      std::vector<int> exps(static_cast<std::size_t>(k), 0);
      std::vector<int> positions;
      const std::size_t end = std::min(trees.size(), (c + 1) * kTreesPerChunk);
      for (std::size_t ti = c * kTreesPerChunk; ti < end; ++ti) {
        const CompiledTree& ct = trees[ti];
        const ChainTable table = builder.build(*ct.tree);
        for (std::uint32_t q = 0; q < table.nonzero.size(); ++q) {
          if (!table.nonzero[q]) continue;
          const double* beta = table.data.data() + static_cast<std::size_t>(q) * dim;
          positions.clear();
          for (int j = 0; j < k; ++j)
            if ((q >> j) & 1u) positions.push_back(j);
          const auto p = positions.size();
          for (std::size_t idx = 0; idx < tuples[p].size(); ++idx) {
            const GammaTuple& g = tuples[p][idx];
            for (std::size_t l = 0; l < p; ++l) exps[positions[l]] = g[l];
            unsigned __int128 den = ct.integral_denominator(exps);
            const unsigned __int128 extra =
                static_cast<unsigned __int128>(ct.weight_den) * fact[p][idx];
            if (den > (~static_cast<unsigned __int128>(0) >> 1) / extra)
              throw LimitError("coefficient denominator overflow");
            den *= extra;
            const double w = static_cast<double>(static_cast<long double>(ct.weight_num) /
                                                 static_cast<long double>(den));
            double* dst = acc.data() + (slot_offset[p] + idx) * dim;
            for (std::size_t mu = 0; mu < dim; ++mu) dst[mu] += w * beta[mu];
          }
          for (int pos : positions) exps[pos] = 0;
        }
      }
    };

    const auto nc = static_cast<std::ptrdiff_t>(n_chunks);
    if (exec == Execution::parallel) {
      std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t c = 0; c < nc; ++c) {
        try {
          run_chunk(static_cast<std::size_t>(c));
        } catch (...) {
#pragma omp critical
          failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
    } else {
      for (std::ptrdiff_t c = 0; c < nc; ++c) run_chunk(static_cast<std::size_t>(c));
    }

    std::vector<double> total(slots * dim, 0.0);
    for (const auto& acc : chunk_acc)
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += acc[i];

    for (int p = 0; p <= k; ++p) {
      for (std::size_t mu = 0; mu < dim; ++mu) {
        for (std::size_t idx = 0; idx < tuples[p].size(); ++idx) {
          const double v = total[(slot_offset[p] + idx) * dim + mu];
          if (v == 0.0) continue;
          if (!std::isfinite(v)) throw NumericError("non-finite dynamical coefficient");
          out.entries.push_back({CoeffKey{static_cast<std::uint8_t>(k),
                                          static_cast<std::uint8_t>(p),
                                          static_cast<std::uint32_t>(mu), tuples[p][idx]},
                                 v});
        }
      }
    }
  }
  return out;
}

CoeffTensor symmetrize_to_T(const STensor& s) {
  std::map<CoeffKey, double> acc;
  for (const auto& e : s.entries) {
    CoeffKey key = e.key;
    std::sort(key.gamma.begin(), key.gamma.end());
    acc[key] += e.value;
  }
  CoeffTensor t;
  t.params = s.params;
  t.dim_g = s.dim_g;
  for (auto& [key, value] : acc)
    if (std::abs(value) > kTensorDropTol) t.entries.push_back({key, value});
  return t;
}

std::vector<RealVector> evaluate_entries(const std::vector<CoeffEntry>& entries, std::size_t dim_g,
                                         int k_max, double t, std::span<const double> d) {
  std::vector<RealVector> slices(static_cast<std::size_t>(k_max),
                                 RealVector::Zero(static_cast<Eigen::Index>(dim_g)));
  for (const auto& e : entries) {
    if (e.key.k > k_max) continue;
    double s = std::pow(t, e.key.k);
    for (auto g : e.key.gamma) s *= (g < d.size() ? d[g] : 0.0) * std::pow(t, g);
    slices[e.key.k - 1][e.key.mu] += s * e.value;
  }
  return slices;
}

}  // namespace magpoly
