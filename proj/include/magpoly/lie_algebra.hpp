#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/SparseCore>

#include "magpoly/common.hpp"
#include "magpoly/hermitian.hpp"

namespace magpoly {

using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Partition of Hilbert-space indices into groups that no basis element
/// couples. Every operator in the span of the basis is block diagonal in it.
struct BlockStructure {
  std::vector<std::vector<Eigen::Index>> blocks;
  std::vector<std::int32_t> block_of;  // state -> block
  std::vector<std::int32_t> local_of;  // state -> index inside its block
};

/// Ordered Hilbert-Schmidt-orthonormal Hermitian basis of the dynamical Lie
/// algebra generated by {A, B}, truncated at a commutation depth.
struct LieBasis {
  std::vector<ComplexMatrix> elements;
  std::vector<int> depth;         // 1 for the generators, +1 per bracket
  std::vector<double> l1_norms;   // maximum absolute column sum of each element
  RealVector a_coeffs;
  RealVector b_coeffs;
  int max_depth = 0;
  bool complete = false;          // the last sweep added nothing

  // Derived views, rebuilt by finalize().
  std::vector<SparseOperator> sparse;
  BlockStructure blocks;

  std::size_t size() const noexcept { return elements.size(); }
  Eigen::Index hilbert_dim() const noexcept {
    return elements.empty() ? 0 : elements.front().rows();
  }

  /// Depth up to which brackets of generators are guaranteed to be spanned.
  int closure_depth() const noexcept;

  /// Recomputes the sparse copies and block structure from `elements`.
  void finalize();
};

struct StructureEntry {
  std::uint32_t i, j, k;
  double value;
  friend bool operator==(const StructureEntry&, const StructureEntry&) = default;
};

/// Real structure constants of the Hermitian bracket: -i[L_i, L_j] = sum_k c_ijk L_k.
class StructureConstants {
 public:
  StructureConstants() = default;
  StructureConstants(std::size_t dim_g, std::vector<StructureEntry> entries, bool closed);

  std::size_t dim() const noexcept { return dim_g_; }
  const std::vector<StructureEntry>& entries() const noexcept { return entries_; }
  /// True if every pair (i, j) was reconstructed within tolerance.
  bool closed() const noexcept { return closed_; }

  /// w_k = sum_ij c_ijk u_i v_j, i.e. the coefficients of -i[U, V].
  RealVector bracket(const RealVector& u, const RealVector& v) const;
  /// Accumulating variant used by hot loops.
  void bracket_into(const double* u, const double* v, double* out) const;

  /// Matrix of v -> bracket(u, v).
  RealMatrix adjoint_matrix(const RealVector& u) const;

 private:
  std::size_t dim_g_ = 0;
  std::vector<StructureEntry> entries_;  // sorted by (i, j, k), both orders stored
  std::vector<std::size_t> row_start_;   // CSR offsets on i
  bool closed_ = false;
};

LieBasis generate_lie_algebra(const HermitianOperator& a, const HermitianOperator& b,
                              int max_depth, double eps_l = 1e-5);

/// Projects -i[L_i, L_j] for every pair. Pairs whose depths add up to at
/// most the closure depth must reconstruct to 1e-8 or a ClosureError is raised.
StructureConstants compute_structure_constants(const LieBasis& basis,
                                               Execution exec = Execution::parallel);

struct Projection {
  RealVector coeffs;
  double residual_norm = 0.0;
};

Projection project_onto_basis(const ComplexMatrix& op, const LieBasis& basis);

/// sum_mu coeffs_mu L_mu as a dense matrix.
ComplexMatrix assemble_operator(const LieBasis& basis, const RealVector& coeffs);

}  // namespace magpoly
