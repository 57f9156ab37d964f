#include "magpoly/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace magpoly {

SparsePolynomial::SparsePolynomial(std::vector<Term> terms, std::size_t dim_g, std::size_t slots,
                                   int m)
    : dim_g_(dim_g), slots_(slots), m_(m) {
  std::stable_sort(terms.begin(), terms.end(), [](const Term& x, const Term& y) {
    if (x.slot != y.slot) return x.slot < y.slot;
    if (x.power != y.power) return x.power < y.power;
    if (x.gamma != y.gamma) return x.gamma < y.gamma;
    return x.mu < y.mu;
  });
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Term& term = terms[i];
    if (term.slot >= slots || term.mu >= dim_g) throw ValidationError("polynomial term out of range");
    for (auto g : term.gamma)
      if (g > m) throw ValidationError("polynomial term exceeds control degree");
    const bool fresh = monomials_.empty() || i == 0 || terms[i - 1].slot != term.slot ||
                       terms[i - 1].power != term.power || terms[i - 1].gamma != term.gamma;
    if (fresh) {
      monomials_.push_back({term.slot, term.power, static_cast<std::uint32_t>(gammas_.size()),
                            static_cast<std::uint32_t>(term.gamma.size()),
                            static_cast<std::uint32_t>(values_.size()), 0});
      gammas_.insert(gammas_.end(), term.gamma.begin(), term.gamma.end());
    }
    mus_.push_back(term.mu);
    values_.push_back(term.value);
    monomials_.back().term_end = static_cast<std::uint32_t>(values_.size());
    max_power_ = std::max(max_power_, term.power);
  }
}

void SparsePolynomial::evaluate(double t, std::span<const double> d, RealMatrix& out) const {
  if (d.size() > static_cast<std::size_t>(m_) + 1)
    throw ValidationError("control has more coefficients than the compiled degree allows");
  out.setZero(static_cast<Eigen::Index>(dim_g_), static_cast<Eigen::Index>(slots_));
  double tpow[256];
  tpow[0] = 1.0;
  for (std::uint32_t i = 1; i <= max_power_; ++i) tpow[i] = tpow[i - 1] * t;
  double dv[256];
  for (int g = 0; g <= m_; ++g) dv[g] = static_cast<std::size_t>(g) < d.size() ? d[g] : 0.0;

  for (const Monomial& mono : monomials_) {
    double c = tpow[mono.power];
    for (std::uint32_t i = 0; i < mono.gamma_len; ++i) c *= dv[gammas_[mono.gamma_begin + i]];
    if (c == 0.0) continue;
    double* col = out.col(mono.slot).data();
    for (std::uint32_t i = mono.term_begin; i < mono.term_end; ++i) col[mus_[i]] += c * values_[i];
  }
}

}  // namespace magpoly
