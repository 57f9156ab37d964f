#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "magpoly/common.hpp"

namespace magpoly {

/// Piecewise polynomial control of class C^L. Node s carries the value and
/// first L derivatives h_l^(s); segment s runs from node s to node s+1 and
/// lasts dt[s].
struct HermiteSpline {
  int L = 1;
  std::vector<double> dt;  // S segment durations
  RealMatrix nodes;        // (S+1) x (L+1)

  int segments() const noexcept { return static_cast<int>(dt.size()); }
  int degree() const noexcept { return 2 * L + 1; }
  double duration() const;
  /// (S+1)(L+1) + S
  std::size_t parameter_count() const noexcept;

  /// Parameter vector layout: nodes row-major (s, l), then the S durations.
  std::size_t node_index(int s, int l) const noexcept;
  std::size_t dt_index(int s) const noexcept;
  RealVector to_parameters() const;
  void set_parameters(const RealVector& x);

  void validate() const;
};

/// Segment s in local time t in [0, dt]: d(t) = sum_n d_n t^n / n!.
struct SegmentPolynomial {
  double dt = 0.0;
  RealVector d;  // 2L + 2 coefficients
};

using SegmentPolynomials = std::vector<SegmentPolynomial>;

SegmentPolynomials spline_to_segments(const HermiteSpline& h);

/// l-th derivative of a segment polynomial at local time tau.
double segment_derivative(const RealVector& d, double tau, int l);

/// Control value (or derivative) at global time t.
double pulse_value(const SegmentPolynomials& segs, double t, int deriv = 0);

/// Jacobian of segment s's coordinates c_s = (dt_s, d^(s)) with respect to the
/// parameters it depends on: nodes s and s+1 and dt_s.
struct SegmentJacobian {
  RealMatrix dd_dh;   // (2L+2) x (2L+2), columns: h^(s)_0..L, h^(s+1)_0..L
  RealVector dd_ddt;  // (2L+2)
};

std::vector<SegmentJacobian> spline_jacobian(const HermiteSpline& h);

/// Dense form: rows are segment coordinates (dt_s, d_0..d_{2L+1}) stacked per
/// segment, columns follow HermiteSpline's parameter layout.
RealMatrix spline_jacobian_dense(const HermiteSpline& h);

/// Splits segments into equal pieces (longest pieces first) until there are
/// new_S segments, reading the nodes off the old polynomials. The pulse is
/// reproduced exactly.
HermiteSpline resample(const HermiteSpline& h, int new_s);

/// Splits every segment into `factor` equal pieces.
HermiteSpline resample_uniform(const HermiteSpline& h, int factor);

/// Nodes from a function f(t, l) returning the l-th derivative at time t,
/// on a uniform grid of S segments over [0, T].
HermiteSpline sample_spline(const std::function<double(double, int)>& f, int L, int S, double T);

void write_spline(const HermiteSpline& h, std::ostream& os, std::optional<double> theta = {});
/// Returns the spline and the optional theta header value.
std::pair<HermiteSpline, std::optional<double>> read_spline(std::istream& is);

}  // namespace magpoly
