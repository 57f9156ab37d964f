#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "magpoly/artifact.hpp"
#include "magpoly/common.hpp"

namespace magpoly {

/// Counter-based sub-seed: splitmix64 of (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct OdeResult {
  ComplexVector psi;
  int steps = 0;          // step count of the accepted solution
  double doubling_change = 0.0;
};

/// Integrates d psi/dt = -i (A + d(t) B) psi over [0, t] with the explicit
/// 8th-order Dormand-Prince tableau at fixed step size. Starting from `steps`,
/// the step count is doubled until the solution moves by at most `tol`;
/// raises NumericError if that does not happen before `max_steps`.
OdeResult ode_reference(const ComplexMatrix& a, const ComplexMatrix& b, std::span<const double> d,
                        double t, const ComplexVector& psi0, int steps = 100, double tol = 1e-13,
                        int max_steps = 1 << 16);

/// One fixed-step integration without the doubling check.
ComplexVector ode_fixed(const ComplexMatrix& a, const ComplexMatrix& b, std::span<const double> d,
                        double t, const ComplexVector& psi0, int steps);

/// M^(k_max) = M_1 + ... + M_k_max (k_max <= 3) from the explicit nested
/// integrals of commutators, by Gauss-Legendre quadrature on the simplex whose
/// order is raised until two successive results agree to 1e-10.
ComplexMatrix quadrature_oracle(const ComplexMatrix& a, const ComplexMatrix& b,
                                std::span<const double> d, double t, int k_max);

/// The individual term M_k (k in 1..3) at a fixed Gauss order per axis.
ComplexMatrix magnus_term_quadrature(const ComplexMatrix& a, const ComplexMatrix& b,
                                     std::span<const double> d, double t, int k, int order);

struct ScanRow {
  double t;
  int sample;
  double eps;
  bool floor;  // eps <= 1e-15
};

struct ScanPoint {
  double t, mean, min, max;
};

struct PowerFit {
  double exponent = 0.0;   // k_app
  double intercept = 0.0;  // log10 prefactor
  int points = 0;
  double t_lo = 0.0, t_hi = 0.0;
};

struct ScanResult {
  int k_max = 0;
  std::vector<ScanRow> rows;  // ordered by (t index, sample)
  std::vector<ScanPoint> points;
  PowerFit fit;
  int convergence_warnings = 0;
};

struct ScanOptions {
  std::vector<double> t_grid;
  int samples = 20;
  std::uint64_t seed = 1;
  double fit_lo = 1e-14, fit_hi = 1e-2;
  Execution exec = Execution::parallel;
};

/// Log-spaced grid of n points over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

/// Least-squares slope of log10(eps) against log10(t) over the per-t means
/// that fall inside [lo, hi]. Throws NumericError for fewer than two points.
PowerFit fit_power_law(const std::vector<ScanPoint>& points, double lo, double hi);

/// State error of the compiled expansion truncated at k_max against the ODE
/// reference, for Haar-random initial states and uniform controls in [-1, 1].
ScanResult error_scan(const Artifact& art, int k_max, const ScanOptions& opts);

void write_scan_csv(const ScanResult& r, std::ostream& os);

}  // namespace magpoly
