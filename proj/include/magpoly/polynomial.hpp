#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "magpoly/common.hpp"
#include "magpoly/coeff_tensor.hpp"

namespace magpoly {

/// Sparse vector-valued polynomial in (t, d_0..d_m). Terms sharing a monomial
/// are grouped so each monomial is evaluated once and then scattered onto the
/// basis directions that carry it.
class SparsePolynomial {
 public:
  struct Term {
    std::uint32_t slot;  // output column
    std::uint32_t power; // exponent of t
    GammaTuple gamma;    // product of d_gamma_i
    std::uint32_t mu;
    double value;
  };

  SparsePolynomial() = default;
  SparsePolynomial(std::vector<Term> terms, std::size_t dim_g, std::size_t slots, int m);

  std::size_t dim() const noexcept { return dim_g_; }
  std::size_t slots() const noexcept { return slots_; }
  int max_degree() const noexcept { return m_; }
  std::size_t term_count() const noexcept { return values_.size(); }

  /// out is resized to dim x slots and overwritten.
  void evaluate(double t, std::span<const double> d, RealMatrix& out) const;

 private:
  struct Monomial {
    std::uint32_t slot, power;
    std::uint32_t gamma_begin, gamma_len;
    std::uint32_t term_begin, term_end;
  };
  std::size_t dim_g_ = 0, slots_ = 0;
  int m_ = 0;
  std::uint32_t max_power_ = 0;
  std::vector<Monomial> monomials_;
  std::vector<std::uint8_t> gammas_;
  std::vector<std::uint32_t> mus_;
  std::vector<double> values_;
};

}  // namespace magpoly
