#include "magpoly/trees.hpp"

#include <array>
#include <functional>
#include <limits>
#include <mutex>

namespace magpoly {

BinaryTree::Ptr BinaryTree::leaf() {
  static const Ptr the_leaf = std::make_shared<const BinaryTree>();
  return the_leaf;
}

BinaryTree::Ptr BinaryTree::pair(Ptr left, Ptr right) {
  auto t = std::make_shared<BinaryTree>();
  t->order_ = left->order_ + right->order_ + 1;
  t->left_ = std::move(left);
  t->right_ = std::move(right);
  return t;
}

std::vector<int> BinaryTree::leaf_labels() const {
  std::vector<int> out;
  std::function<void(const BinaryTree&, int)> walk = [&](const BinaryTree& t, int offset) {
    if (t.is_leaf()) {
      out.push_back(offset + 1);
      return;
    }
    walk(*t.left_, offset + t.right_->leaf_count());
    walk(*t.right_, offset);
  };
  walk(*this, 0);
  return out;
}

const std::vector<BinaryTree::Ptr>& enumerate_trees(int k) {
  if (k < 0 || k > kMaxTreeOrder)
    throw LimitError("tree order " + std::to_string(k) + " outside [0, " +
                     std::to_string(kMaxTreeOrder) + "]");
  static std::mutex mutex;
  static std::array<std::vector<BinaryTree::Ptr>, kMaxTreeOrder + 1> memo;
  static std::array<bool, kMaxTreeOrder + 1> ready{};

  std::lock_guard lock(mutex);
  std::function<const std::vector<BinaryTree::Ptr>&(int)> build =
      [&](int order) -> const std::vector<BinaryTree::Ptr>& {
    if (ready[order]) return memo[order];
    std::vector<BinaryTree::Ptr> out;
    if (order == 0) {
      out.push_back(BinaryTree::leaf());
    } else {
      for (int m1 = 0; m1 < order; ++m1) {
        const auto& lefts = build(m1);
        const auto& rights = build(order - 1 - m1);
        for (const auto& l : lefts)
          for (const auto& r : rights) out.push_back(BinaryTree::pair(l, r));
      }
    }
    memo[order] = std::move(out);
    ready[order] = true;
    return memo[order];
  };
  return build(k);
}

Rational bernoulli(int n) {
  if (n < 0) throw ValidationError("Bernoulli index must be non-negative");
  static std::mutex mutex;
  static std::vector<Rational> cache{Rational(1)};
  std::lock_guard lock(mutex);
  while (static_cast<int>(cache.size()) <= n) {
    const int m = static_cast<int>(cache.size());
    // sum_{j=0}^{m} C(m+1, j) B_j = 0
    Rational acc = 0;
    boost::multiprecision::cpp_int binom = 1;  // C(m+1, 0)
    for (int j = 0; j < m; ++j) {
      acc += Rational(binom) * cache[j];
      binom = binom * (m + 1 - j) / (j + 1);
    }
    cache.push_back(-acc / Rational(m + 1));
  }
  return cache[n];
}

Rational tree_weight(const BinaryTree& tree) {
  int s = 0;
  Rational product = 1;
  const BinaryTree* node = &tree;
  while (!node->is_leaf()) {
    product *= tree_weight(*node->left());
    node = node->right().get();
    ++s;
  }
  Rational factorial = 1;
  for (int i = 2; i <= s; ++i) factorial *= i;
  return bernoulli(s) / factorial * product;
}

namespace {

struct Monomial {
  int exponent;
  Rational coeff;
};

Monomial integrate_tree(const BinaryTree& t, int offset, std::span<const int> exps) {
  if (t.is_leaf()) {
    const int e = offset < static_cast<int>(exps.size()) ? exps[offset] : 0;
    return {e, Rational(1)};
  }
  const int nr = t.right()->leaf_count();
  Monomial r = integrate_tree(*t.right(), offset, exps);
  Monomial l = integrate_tree(*t.left(), offset + nr, exps);
  // integral_0^x s^e ds = x^(e+1) / (e+1)
  return {r.exponent + l.exponent + 1, r.coeff * l.coeff / Rational(l.exponent + 1)};
}

const RealVector& leaf_vector(std::uint32_t placement, int label0, const RealVector& a,
                              const RealVector& b) {
  return ((placement >> label0) & 1u) ? b : a;
}

RealVector chain(const BinaryTree& t, int offset, std::uint32_t placement, const RealVector& a,
                 const RealVector& b, const StructureConstants& sc) {
  if (t.is_leaf()) return leaf_vector(placement, offset, a, b);
  const int nr = t.right()->leaf_count();
  return sc.bracket(chain(*t.left(), offset + nr, placement, a, b, sc),
                    chain(*t.right(), offset, placement, a, b, sc));
}

bool trivially_zero(const BinaryTree& t, int offset, std::uint32_t placement) {
  if (t.is_leaf()) return false;
  const int nr = t.right()->leaf_count();
  if (t.left()->is_leaf() && t.right()->is_leaf()) {
    const bool lb = (placement >> (offset + 1)) & 1u;
    const bool rb = (placement >> offset) & 1u;
    return lb == rb;
  }
  return trivially_zero(*t.left(), offset + nr, placement) ||
         trivially_zero(*t.right(), offset, placement);
}

}  // namespace

Rational tree_monomial_integral(const BinaryTree& tree, std::span<const int> exponents) {
  if (static_cast<int>(exponents.size()) > tree.leaf_count())
    throw ValidationError("more exponents than leaves");
  for (int e : exponents)
    if (e < 0) throw ValidationError("negative exponent");
  Monomial root = integrate_tree(tree, 0, exponents);
  return root.coeff / Rational(root.exponent + 1);
}

Rational tree_monomial_integral(const BinaryTree& tree, const std::map<int, int>& exponents) {
  std::vector<int> dense(static_cast<std::size_t>(tree.leaf_count()), 0);
  for (const auto& [label, e] : exponents) {
    if (label < 1 || label > tree.leaf_count())
      throw ValidationError("invalid leaf label " + std::to_string(label));
    dense[label - 1] = e;
  }
  return tree_monomial_integral(tree, std::span<const int>(dense));
}

RealVector tree_commutator_chain(const BinaryTree& tree, std::uint32_t placement,
                                 const RealVector& a_coeffs, const RealVector& b_coeffs,
                                 const StructureConstants& sc) {
  const auto d = static_cast<Eigen::Index>(sc.dim());
  if (a_coeffs.size() != d || b_coeffs.size() != d)
    throw ValidationError("generator coefficient length does not match the structure constants");
  if (tree.leaf_count() < 32 && (placement >> tree.leaf_count()) != 0)
    throw ValidationError("placement has bits beyond the leaf count");
  if (chain_trivially_zero(tree, placement)) return RealVector::Zero(d);
  return chain(tree, 0, placement, a_coeffs, b_coeffs, sc);
}

bool chain_trivially_zero(const BinaryTree& tree, std::uint32_t placement) {
  return trivially_zero(tree, 0, placement);
}

CompiledTree::CompiledTree(BinaryTree::Ptr t) : tree(std::move(t)) {
  leaves = tree->leaf_count();
  weight = tree_weight(*tree);
  using boost::multiprecision::cpp_int;
  const cpp_int num = boost::multiprecision::numerator(weight);
  const cpp_int den = boost::multiprecision::denominator(weight);
  if (boost::multiprecision::abs(num) > cpp_int(std::numeric_limits<std::int64_t>::max()) ||
      den > cpp_int(std::numeric_limits<std::uint64_t>::max()))
    throw LimitError("tree weight does not fit 64-bit integers");
  weight_num = num.convert_to<std::int64_t>();
  weight_den = den.convert_to<std::uint64_t>();

  std::function<void(const BinaryTree&, int)> walk = [&](const BinaryTree& node, int offset) {
    if (node.is_leaf()) return;
    const int nr = node.right()->leaf_count();
    const int nl = node.left()->leaf_count();
    factors.push_back({offset + nr, offset + nr + nl});
    walk(*node.left(), offset + nr);
    walk(*node.right(), offset);
  };
  walk(*tree, 0);
  factors.push_back({0, leaves});
}

unsigned __int128 CompiledTree::integral_denominator(std::span<const int> exponents) const {
  std::array<int, 2 * kMaxTreeOrder + 4> prefix{};
  for (int i = 0; i < leaves; ++i) prefix[i + 1] = prefix[i] + exponents[i];
  unsigned __int128 d = 1;
  constexpr unsigned __int128 limit = ~static_cast<unsigned __int128>(0) >> 8;
  for (const auto& f : factors) {
    const unsigned factor = static_cast<unsigned>(f.hi - f.lo + prefix[f.hi] - prefix[f.lo]);
    if (d > limit / factor) throw LimitError("tree integral denominator overflow");
    d *= factor;
  }
  return d;
}

}  // namespace magpoly
