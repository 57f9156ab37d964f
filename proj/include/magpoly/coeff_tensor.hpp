#pragma once

#include <array>
#include <compare>
#include <span>
#include <cstdint>
#include <vector>

#include "magpoly/common.hpp"
#include "magpoly/lie_algebra.hpp"

namespace magpoly {

/// Truncation of the compiled expansion.
struct ExpansionParams {
  int k_max = 0;      // Magnus order k_M
  int gamma_max = 0;  // time truncation Gamma: keep k + sum(gamma) <= Gamma
  int m = 0;          // highest control polynomial degree

  friend bool operator==(const ExpansionParams&, const ExpansionParams&) = default;
};

void validate(const ExpansionParams& params);

using GammaTuple = std::vector<std::uint8_t>;

struct CoeffKey {
  std::uint8_t k = 0;
  std::uint8_t p = 0;
  std::uint32_t mu = 0;
  GammaTuple gamma;

  friend auto operator<=>(const CoeffKey&, const CoeffKey&) = default;
  friend bool operator==(const CoeffKey&, const CoeffKey&) = default;
};

struct CoeffEntry {
  CoeffKey key;
  double value = 0.0;
  friend bool operator==(const CoeffEntry&, const CoeffEntry&) = default;
};

/// Unsymmetrized dynamical coefficients: gamma tuples are ordered and each
/// ordering is a separate entry.
struct STensor {
  ExpansionParams params;
  std::size_t dim_g = 0;
  std::vector<CoeffEntry> entries;  // sorted by key
};

/// Symmetrized dynamical coefficients over sorted gamma tuples; the compiled
/// dynamics of a control model.
struct CoeffTensor {
  ExpansionParams params;
  std::size_t dim_g = 0;
  std::vector<CoeffEntry> entries;  // sorted by key, |value| > 1e-14
  RealVector basis_l1_norms;
  std::array<std::uint8_t, 32> model_digest{};
};

/// True if the key lies in the admissible index set for `params`
/// (sorted gamma tuples only when `sorted` is set).
bool key_admissible(const CoeffKey& key, const ExpansionParams& params, bool sorted);

/// Compiles S^{(k,p)}_{mu, gamma} for 1 <= k <= k_max.
STensor compute_S(const LieBasis& basis, const StructureConstants& sc,
                  const ExpansionParams& params, Execution exec = Execution::parallel);

/// T_{sorted gamma} = sum of S over the distinct orderings of gamma.
CoeffTensor symmetrize_to_T(const STensor& s);

/// Polynomial value of a tensor (S or T form) at (t, d): one vector per order k.
/// Straightforward reference evaluator used by tests; see PolynomialEvaluator
/// for the production path.
std::vector<RealVector> evaluate_entries(const std::vector<CoeffEntry>& entries, std::size_t dim_g,
                                         int k_max, double t, std::span<const double> d);

}  // namespace magpoly
