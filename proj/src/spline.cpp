#include "magpoly/spline.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/QR>

namespace magpoly {
namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Constraint matrix of one segment: rows 0..L read the start derivatives,
/// rows L+1..2L+1 the end derivatives at local time dt.
RealMatrix constraint_matrix(int L, double dt) {
  const int n = 2 * L + 2;
  RealMatrix b = RealMatrix::Zero(n, n);
  for (int l = 0; l <= L; ++l) {
    b(l, l) = 1.0;
    for (int c = l; c < n; ++c) b(L + 1 + l, c) = std::pow(dt, c - l) / factorial(c - l);
  }
  return b;
}

RealMatrix constraint_matrix_ddt(int L, double dt) {
  const int n = 2 * L + 2;
  RealMatrix b = RealMatrix::Zero(n, n);
  for (int l = 0; l <= L; ++l)
    for (int c = l + 1; c < n; ++c) b(L + 1 + l, c) = std::pow(dt, c - l - 1) / factorial(c - l - 1);
  return b;
}

RealVector node_pair(const HermiteSpline& h, int s) {
  const int L = h.L;
  RealVector rhs(2 * L + 2);
  rhs.head(L + 1) = h.nodes.row(s).transpose();
  rhs.tail(L + 1) = h.nodes.row(s + 1).transpose();
  return rhs;
}

RealMatrix pseudo_inverse(const RealMatrix& b) {
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod;
  cod.setThreshold(1e-12);
  cod.compute(b);
  return cod.pseudoInverse();
}

}  // namespace

double HermiteSpline::duration() const { return std::accumulate(dt.begin(), dt.end(), 0.0); }

std::size_t HermiteSpline::parameter_count() const noexcept {
  return static_cast<std::size_t>((segments() + 1) * (L + 1) + segments());
}

std::size_t HermiteSpline::node_index(int s, int l) const noexcept {
  return static_cast<std::size_t>(s * (L + 1) + l);
}

std::size_t HermiteSpline::dt_index(int s) const noexcept {
  return static_cast<std::size_t>((segments() + 1) * (L + 1) + s);
}

RealVector HermiteSpline::to_parameters() const {
  RealVector x(static_cast<Eigen::Index>(parameter_count()));
  for (int s = 0; s <= segments(); ++s)
    for (int l = 0; l <= L; ++l) x[node_index(s, l)] = nodes(s, l);
  for (int s = 0; s < segments(); ++s) x[dt_index(s)] = dt[s];
  return x;
}

void HermiteSpline::set_parameters(const RealVector& x) {
  if (x.size() != static_cast<Eigen::Index>(parameter_count()))
    throw ValidationError("parameter vector length does not match the spline");
  for (int s = 0; s <= segments(); ++s)
    for (int l = 0; l <= L; ++l) nodes(s, l) = x[node_index(s, l)];
  for (int s = 0; s < segments(); ++s) dt[s] = x[dt_index(s)];
}

void HermiteSpline::validate() const {
  if (L < 0) throw ValidationError("spline smoothness L must be non-negative");
  if (dt.empty()) throw ValidationError("spline needs at least one segment");
  if (nodes.rows() != segments() + 1 || nodes.cols() != L + 1)
    throw ValidationError("spline node table has the wrong shape");
  for (double v : dt)
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("segment durations must be positive");
  if (!nodes.allFinite()) throw ValidationError("spline nodes must be finite");
}

SegmentPolynomials spline_to_segments(const HermiteSpline& h) {
  h.validate();
  SegmentPolynomials out;
  out.reserve(h.dt.size());
  for (int s = 0; s < h.segments(); ++s) {
    const RealMatrix b = constraint_matrix(h.L, h.dt[s]);
    Eigen::FullPivLU<RealMatrix> lu(b);
    if (!lu.isInvertible()) throw NumericError("singular Hermite constraint system");
    out.push_back({h.dt[s], lu.solve(node_pair(h, s))});
  }
  return out;
}

double segment_derivative(const RealVector& d, double tau, int l) {
  double v = 0.0, term = 1.0;
  for (Eigen::Index n = l; n < d.size(); ++n) {
    if (n > l) term *= tau / static_cast<double>(n - l);
    v += d[n] * term;
  }
  return v;
}

double pulse_value(const SegmentPolynomials& segs, double t, int deriv) {
  double start = 0.0;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (t <= start + segs[s].dt || s + 1 == segs.size())
      return segment_derivative(segs[s].d, t - start, deriv);
    start += segs[s].dt;
  }
  throw ValidationError("empty pulse");
}

std::vector<SegmentJacobian> spline_jacobian(const HermiteSpline& h) {
  h.validate();
  std::vector<SegmentJacobian> out;
  out.reserve(h.dt.size());
  for (int s = 0; s < h.segments(); ++s) {
    // B(dt) d = h_pair  =>  B dd = dh - (dB/ddt) d ddt
    const RealMatrix b = constraint_matrix(h.L, h.dt[s]);
    const RealMatrix b_pinv = pseudo_inverse(b);
    const RealVector d = b_pinv * node_pair(h, s);
    SegmentJacobian j;
    j.dd_dh = b_pinv;
    j.dd_ddt = -b_pinv * (constraint_matrix_ddt(h.L, h.dt[s]) * d);
    out.push_back(std::move(j));
  }
  return out;
}

RealMatrix spline_jacobian_dense(const HermiteSpline& h) {
  const auto blocks = spline_jacobian(h);
  const int L = h.L;
  const int width = 2 * L + 3;
  RealMatrix jac = RealMatrix::Zero(h.segments() * width, static_cast<Eigen::Index>(h.parameter_count()));
  for (int s = 0; s < h.segments(); ++s) {
    const int row = s * width;
    jac(row, static_cast<Eigen::Index>(h.dt_index(s))) = 1.0;
    for (int c = 0; c < 2 * L + 2; ++c) {
      const auto col = static_cast<Eigen::Index>(c <= L ? h.node_index(s, c) : h.node_index(s + 1, c - L - 1));
      jac.block(row + 1, col, 2 * L + 2, 1) = blocks[s].dd_dh.col(c);
    }
    jac.block(row + 1, static_cast<Eigen::Index>(h.dt_index(s)), 2 * L + 2, 1) = blocks[s].dd_ddt;
  }
  return jac;
}

namespace {

HermiteSpline split_segments(const HermiteSpline& h, const std::vector<int>& pieces) {
  const auto segs = spline_to_segments(h);
  const int total = std::accumulate(pieces.begin(), pieces.end(), 0);
  HermiteSpline out;
  out.L = h.L;
  out.nodes.resize(total + 1, h.L + 1);
  int row = 0;
  for (int s = 0; s < h.segments(); ++s) {
    const double piece = h.dt[s] / pieces[s];
    for (int j = 0; j < pieces[s]; ++j) {
      out.dt.push_back(piece);
      for (int l = 0; l <= h.L; ++l)
        out.nodes(row, l) = j == 0 ? h.nodes(s, l) : segment_derivative(segs[s].d, j * piece, l);
      ++row;
    }
  }
  out.nodes.row(row) = h.nodes.row(h.segments());
  return out;
}

}  // namespace

HermiteSpline resample(const HermiteSpline& h, int new_s) {
  h.validate();
  if (new_s <= h.segments()) throw ValidationError("resampling must increase the segment count");
  std::vector<int> pieces(h.dt.size(), 1);
  for (int added = h.segments(); added < new_s; ++added) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < pieces.size(); ++s)
      if (h.dt[s] / pieces[s] > h.dt[best] / pieces[best]) best = s;
    ++pieces[best];
  }
  return split_segments(h, pieces);
}

HermiteSpline resample_uniform(const HermiteSpline& h, int factor) {
  h.validate();
  if (factor < 2) throw ValidationError("resampling factor must be at least 2");
  return split_segments(h, std::vector<int>(h.dt.size(), factor));
}

HermiteSpline sample_spline(const std::function<double(double, int)>& f, int L, int S, double T) {
  if (S < 1 || !(T > 0.0) || L < 0) throw ValidationError("invalid spline sampling request");
  HermiteSpline h;
  h.L = L;
  h.dt.assign(static_cast<std::size_t>(S), T / S);
  h.nodes.resize(S + 1, L + 1);
  for (int s = 0; s <= S; ++s)
    for (int l = 0; l <= L; ++l) h.nodes(s, l) = f(T * s / S, l);
  return h;
}

void write_spline(const HermiteSpline& h, std::ostream& os, std::optional<double> theta) {
  os << "# magpoly-spline v1\n# L " << h.L << " S " << h.segments() << '\n';
  os << std::setprecision(17);
  if (theta) os << "# theta " << *theta << '\n';
  for (int s = 0; s <= h.segments(); ++s) {
    os << (s == 0 ? 0.0 : h.dt[s - 1]);
    for (int l = 0; l <= h.L; ++l) os << ' ' << h.nodes(s, l);
    os << '\n';
  }
}

std::pair<HermiteSpline, std::optional<double>> read_spline(std::istream& is) {
  HermiteSpline h;
  std::optional<double> theta;
  int L = -1, S = -1;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "L") {
        std::string skey;
        ls >> L >> skey >> S;
        if (!ls || skey != "S") throw FormatError("malformed spline header");
      } else if (key == "theta") {
        double v;
        if (!(ls >> v)) throw FormatError("malformed theta header");
        theta = v;
      }
      continue;
    }
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw FormatError("non-numeric value in spline file");
    rows.push_back(std::move(row));
  }
  if (L < 0 || S < 1) throw FormatError("spline file lacks the L/S header");
  if (static_cast<int>(rows.size()) != S + 1) throw FormatError("spline file has the wrong row count");
  h.L = L;
  h.nodes.resize(S + 1, L + 1);
  for (int s = 0; s <= S; ++s) {
    if (static_cast<int>(rows[s].size()) != L + 2) throw FormatError("spline row has the wrong width");
    if (s > 0) h.dt.push_back(rows[s][0]);
    for (int l = 0; l <= L; ++l) h.nodes(s, l) = rows[s][l + 1];
  }
  try {
    h.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("invalid spline: ") + e.what());
  }
  return {h, theta};
}

}  // namespace magpoly
