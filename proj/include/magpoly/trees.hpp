#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "magpoly/common.hpp"
#include "magpoly/lie_algebra.hpp"

namespace magpoly {

using Rational = boost::multiprecision::cpp_rational;

/// Iserles-Norsett binary tree. A pair node stands for [ integral of left, right ]:
/// the right child lives at the node's own time, the left child is integrated
/// up to it. Trees are immutable and shared between the enumeration sets.
///
/// Leaf labels follow a depth-first traversal that visits the right child
/// before the left one, so label 1 is the end of the right spine (outermost
/// time) and every subtree owns a contiguous label range.
class BinaryTree {
 public:
  using Ptr = std::shared_ptr<const BinaryTree>;

  static Ptr leaf();
  static Ptr pair(Ptr left, Ptr right);

  bool is_leaf() const noexcept { return !left_; }
  const Ptr& left() const noexcept { return left_; }
  const Ptr& right() const noexcept { return right_; }
  int order() const noexcept { return order_; }
  int leaf_count() const noexcept { return order_ + 1; }

  /// Leaf labels in left-to-right drawing order (for display and tests).
  std::vector<int> leaf_labels() const;

 private:
  Ptr left_, right_;
  int order_ = 0;
};

constexpr int kMaxTreeOrder = 12;

/// All trees of order k (k pair nodes, k+1 leaves), in a fixed order. Cached.
const std::vector<BinaryTree::Ptr>& enumerate_trees(int k);

/// Bernoulli number B_n with B_1 = -1/2.
Rational bernoulli(int n);

/// Exact weight alpha(tree) = B_s / s! * prod alpha(spine subtrees).
Rational tree_weight(const BinaryTree& tree);

/// Exact value of the chained integral over [0, 1] of prod_leaf x_leaf^exponent.
/// `exponents` maps leaf labels (1-based) to powers; missing labels mean 0.
Rational tree_monomial_integral(const BinaryTree& tree, const std::map<int, int>& exponents);

/// Same, with exponents indexed by label-1.
Rational tree_monomial_integral(const BinaryTree& tree, std::span<const int> exponents);

/// Coefficients of the chained Hermitian bracket over the tree, with B at the
/// leaves whose bit (label-1) is set in `placement` and A elsewhere.
RealVector tree_commutator_chain(const BinaryTree& tree, std::uint32_t placement,
                                 const RealVector& a_coeffs, const RealVector& b_coeffs,
                                 const StructureConstants& sc);

/// True when some bracket of two leaves holds the same generator on both sides.
bool chain_trivially_zero(const BinaryTree& tree, std::uint32_t placement);

/// Flattened form of a tree used by the coefficient compiler. The chained
/// integral of a monomial equals 1 / prod_f (f.size + sum of exponents on the
/// leaves in f), where the last factor covers all leaves.
struct CompiledTree {
  struct Factor {
    int lo, hi;  // label range [lo, hi), 0-based
  };
  BinaryTree::Ptr tree;
  int leaves = 0;
  Rational weight;
  std::int64_t weight_num = 0;
  std::uint64_t weight_den = 1;
  std::vector<Factor> factors;

  explicit CompiledTree(BinaryTree::Ptr t);

  /// Denominator D with integral = 1/D. Throws LimitError on 128-bit overflow.
  unsigned __int128 integral_denominator(std::span<const int> exponents) const;
};

}  // namespace magpoly
