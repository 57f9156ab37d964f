#include "magpoly/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "magpoly/magnus_eval.hpp"
#include "magpoly/models.hpp"

namespace magpoly {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

// ---------------------------------------------------------------------------
// ODE reference

namespace {

// Dormand-Prince 8(5,3) coefficients, 8th-order solution only.
struct Dop853 {
  static constexpr double c2 = 0.526001519587677318785587544488E-01,
                          c3 = 0.789002279381515978178381316732E-01,
                          c4 = 0.118350341907227396726757197510E+00,
                          c5 = 0.281649658092772603273242802490E+00,
                          c6 = 0.333333333333333333333333333333E+00, c7 = 0.25E+00,
                          c8 = 0.307692307692307692307692307692E+00,
                          c9 = 0.651282051282051282051282051282E+00, c10 = 0.6E+00,
                          c11 = 0.857142857142857142857142857142E+00;
  static constexpr double b1 = 5.42937341165687622380535766363E-2,
                          b6 = 4.45031289275240888144113950566E0,
                          b7 = 1.89151789931450038304281599044E0,
                          b8 = -5.8012039600105847814672114227E0,
                          b9 = 3.1116436695781989440891606237E-1,
                          b10 = -1.52160949662516078556178806805E-1,
                          b11 = 2.01365400804030348374776537501E-1,
                          b12 = 4.47106157277725905176885569043E-2;
  static constexpr double a21 = 5.26001519587677318785587544488E-2,
                          a31 = 1.97250569845378994544595329183E-2,
                          a32 = 5.91751709536136983633785987549E-2,
                          a41 = 2.95875854768068491816892993775E-2,
                          a43 = 8.87627564304205475450678981324E-2,
                          a51 = 2.41365134159266685502369798665E-1,
                          a53 = -8.84549479328286085344864962717E-1,
                          a54 = 9.24834003261792003115737966543E-1,
                          a61 = 3.7037037037037037037037037037E-2,
                          a64 = 1.70828608729473871279604482173E-1,
                          a65 = 1.25467687566822425016691814123E-1, a71 = 3.7109375E-2,
                          a74 = 1.70252211019544039314978060272E-1,
                          a75 = 6.02165389804559606850219397283E-2, a76 = -1.7578125E-2,
                          a81 = 3.70920001185047927108779319836E-2,
                          a84 = 1.70383925712239993810214054705E-1,
                          a85 = 1.07262030446373284651809199168E-1,
                          a86 = -1.53194377486244017527936158236E-2,
                          a87 = 8.27378916381402288758473766002E-3,
                          a91 = 6.24110958716075717114429577812E-1,
                          a94 = -3.36089262944694129406857109825E0,
                          a95 = -8.68219346841726006818189891453E-1,
                          a96 = 2.75920996994467083049415600797E1,
                          a97 = 2.01540675504778934086186788979E1,
                          a98 = -4.34898841810699588477366255144E1,
                          a101 = 4.77662536438264365890433908527E-1,
                          a104 = -2.48811461997166764192642586468E0,
                          a105 = -5.90290826836842996371446475743E-1,
                          a106 = 2.12300514481811942347288949897E1,
                          a107 = 1.52792336328824235832596922938E1,
                          a108 = -3.32882109689848629194453265587E1,
                          a109 = -2.03312017085086261358222928593E-2,
                          a111 = -9.3714243008598732571704021658E-1,
                          a114 = 5.18637242884406370830023853209E0,
                          a115 = 1.09143734899672957818500254654E0,
                          a116 = -8.14978701074692612513997267357E0,
                          a117 = -1.85200656599969598641566180701E1,
                          a118 = 2.27394870993505042818970056734E1,
                          a119 = 2.49360555267965238987089396762E0,
                          a1110 = -3.0467644718982195003823669022E0,
                          a121 = 2.27331014751653820792359768449E0,
                          a124 = -1.05344954667372501984066689879E1,
                          a125 = -2.00087205822486249909675718444E0,
                          a126 = -1.79589318631187989172765950534E1,
                          a127 = 2.79488845294199600508499808837E1,
                          a128 = -2.85899827713502369474065508674E0,
                          a129 = -8.87285693353062954433549289258E0,
                          a1210 = 1.23605671757943030647266201528E1,
                          a1211 = 6.43392746015763530355970484046E-1;
};

}  // namespace

ComplexVector ode_fixed(const ComplexMatrix& a, const ComplexMatrix& b, std::span<const double> d,
                        double t, const ComplexVector& psi0, int steps) {
  if (steps < 1) throw ValidationError("step count must be positive");
  if (a.rows() != psi0.size() || b.rows() != psi0.size()) throw ValidationError("dimension mismatch");
  using C = Dop853;
  const cplx mi(0.0, -1.0);
  auto f = [&](double s, const ComplexVector& y) -> ComplexVector {
    return mi * (a * y + control_value(d, s) * (b * y));
  };
  const double h = t / steps;
  ComplexVector y = psi0;
  for (int n = 0; n < steps; ++n) {
    const double s = n * h;
    const ComplexVector k1 = f(s, y);
    const ComplexVector k2 = f(s + C::c2 * h, y + h * (C::a21 * k1));
    const ComplexVector k3 = f(s + C::c3 * h, y + h * (C::a31 * k1 + C::a32 * k2));
    const ComplexVector k4 = f(s + C::c4 * h, y + h * (C::a41 * k1 + C::a43 * k3));
    const ComplexVector k5 = f(s + C::c5 * h, y + h * (C::a51 * k1 + C::a53 * k3 + C::a54 * k4));
    const ComplexVector k6 = f(s + C::c6 * h, y + h * (C::a61 * k1 + C::a64 * k4 + C::a65 * k5));
    const ComplexVector k7 =
        f(s + C::c7 * h, y + h * (C::a71 * k1 + C::a74 * k4 + C::a75 * k5 + C::a76 * k6));
    const ComplexVector k8 = f(s + C::c8 * h, y + h * (C::a81 * k1 + C::a84 * k4 + C::a85 * k5 +
                                                       C::a86 * k6 + C::a87 * k7));
    const ComplexVector k9 = f(s + C::c9 * h, y + h * (C::a91 * k1 + C::a94 * k4 + C::a95 * k5 +
                                                       C::a96 * k6 + C::a97 * k7 + C::a98 * k8));
    const ComplexVector k10 =
        f(s + C::c10 * h, y + h * (C::a101 * k1 + C::a104 * k4 + C::a105 * k5 + C::a106 * k6 +
                                   C::a107 * k7 + C::a108 * k8 + C::a109 * k9));
    const ComplexVector k11 =
        f(s + C::c11 * h, y + h * (C::a111 * k1 + C::a114 * k4 + C::a115 * k5 + C::a116 * k6 +
                                   C::a117 * k7 + C::a118 * k8 + C::a119 * k9 + C::a1110 * k10));
    const ComplexVector k12 =
        f(s + h, y + h * (C::a121 * k1 + C::a124 * k4 + C::a125 * k5 + C::a126 * k6 +
                          C::a127 * k7 + C::a128 * k8 + C::a129 * k9 + C::a1210 * k10 +
                          C::a1211 * k11));
    y += h * (C::b1 * k1 + C::b6 * k6 + C::b7 * k7 + C::b8 * k8 + C::b9 * k9 + C::b10 * k10 +
              C::b11 * k11 + C::b12 * k12);
  }
  return y;
}

OdeResult ode_reference(const ComplexMatrix& a, const ComplexMatrix& b, std::span<const double> d,
                        double t, const ComplexVector& psi0, int steps, double tol, int max_steps) {
  if (steps < 16) throw ValidationError("reference integration needs at least 16 steps");
  OdeResult out;
  ComplexVector coarse = ode_fixed(a, b, d, t, psi0, steps);
  for (int n = steps; 2 * n <= max_steps; n *= 2) {
    ComplexVector fine = ode_fixed(a, b, d, t, psi0, 2 * n);
    const double change = (fine - coarse).norm();
    if (!std::isfinite(change)) break;
    if (change <= tol) {
      out.psi = std::move(fine);
      out.steps = 2 * n;
      out.doubling_change = change;
      return out;
    }
    coarse = std::move(fine);
  }
  throw NumericError("ODE reference did not converge under step doubling");
}

// ---------------------------------------------------------------------------
// Quadrature oracle

namespace {

struct Rule01 {
  std::vector<double> x, w;
};

template <int N>
Rule01 make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& abs = G::abscissa();
  const auto& wts = G::weights();
  Rule01 r;
  for (std::size_t i = 0; i < abs.size(); ++i) {
    const double xi = abs[i];
    if (xi == 0.0) {
      r.x.push_back(0.5);
      r.w.push_back(0.5 * wts[i]);
      continue;
    }
    r.x.push_back(0.5 * (1.0 - xi));
    r.w.push_back(0.5 * wts[i]);
    r.x.push_back(0.5 * (1.0 + xi));
    r.w.push_back(0.5 * wts[i]);
  }
  return r;
}

const Rule01& rule_for(int order) {
  static const Rule01 r8 = make_rule<8>(), r12 = make_rule<12>(), r16 = make_rule<16>(),
                      r24 = make_rule<24>(), r32 = make_rule<32>(), r48 = make_rule<48>(),
                      r64 = make_rule<64>();
  switch (order) {
    case 8: return r8;
    case 12: return r12;
    case 16: return r16;
    case 24: return r24;
    case 32: return r32;
    case 48: return r48;
    case 64: return r64;
  }
  throw ValidationError("unsupported quadrature order");
}

ComplexMatrix comm(const ComplexMatrix& x, const ComplexMatrix& y) { return x * y - y * x; }

}  // namespace

ComplexMatrix magnus_term_quadrature(const ComplexMatrix& a, const ComplexMatrix& b,
                                     std::span<const double> d, double t, int k, int order) {
  const Rule01& r = rule_for(order);
  auto h = [&](double s) -> ComplexMatrix { return a + control_value(d, s) * b; };
  const Eigen::Index n = a.rows();
  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  const std::size_t q = r.x.size();
  if (k == 1) {
    for (std::size_t i = 0; i < q; ++i) acc += r.w[i] * h(t * r.x[i]);
    return t * acc;
  }
  if (k == 2) {
    for (std::size_t i = 0; i < q; ++i) {
      const double t1 = t * r.x[i];
      const ComplexMatrix h1 = h(t1);
      ComplexMatrix inner = ComplexMatrix::Zero(n, n);
      for (std::size_t j = 0; j < q; ++j) inner += r.w[j] * comm(h1, h(t1 * r.x[j]));
      acc += (r.w[i] * t1) * inner;
    }
    return cplx(0.0, -0.5) * t * acc;
  }
  if (k == 3) {
    for (std::size_t i = 0; i < q; ++i) {
      const double t1 = t * r.x[i];
      const ComplexMatrix h1 = h(t1);
      for (std::size_t j = 0; j < q; ++j) {
        const double t2 = t1 * r.x[j];
        const ComplexMatrix h2 = h(t2);
        const ComplexMatrix h21 = comm(h2, h1);
        ComplexMatrix inner = ComplexMatrix::Zero(n, n);
        for (std::size_t l = 0; l < q; ++l) {
          const ComplexMatrix h3 = h(t2 * r.x[l]);
          inner += r.w[l] * (comm(h1, comm(h2, h3)) + comm(h3, h21));
        }
        acc += (r.w[i] * r.w[j] * t1 * t2) * inner;
      }
    }
    return (-1.0 / 6.0) * t * acc;
  }
  throw ValidationError("quadrature oracle supports orders 1 to 3");
}

ComplexMatrix quadrature_oracle(const ComplexMatrix& a, const ComplexMatrix& b,
                                std::span<const double> d, double t, int k_max) {
  if (k_max < 1 || k_max > 3) throw ValidationError("quadrature oracle supports k_max in 1..3");
  static constexpr std::array<int, 7> orders{8, 12, 16, 24, 32, 48, 64};
  auto total = [&](int order) {
    ComplexMatrix m = magnus_term_quadrature(a, b, d, t, 1, order);
    for (int k = 2; k <= k_max; ++k) m += magnus_term_quadrature(a, b, d, t, k, order);
    return m;
  };
  ComplexMatrix prev = total(orders[0]);
  for (std::size_t i = 1; i < orders.size(); ++i) {
    ComplexMatrix cur = total(orders[i]);
    if ((cur - prev).norm() <= 1e-10 * std::max(cur.norm(), 1e-300)) return cur;
    prev = std::move(cur);
  }
  throw NumericError("nested quadrature did not stabilize");
}

// ---------------------------------------------------------------------------
// Error scan

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw ValidationError("invalid log grid");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double l0 = std::log10(lo), l1 = std::log10(hi);
  for (int i = 0; i < n; ++i) g[i] = std::pow(10.0, l0 + (l1 - l0) * i / (n - 1));
  return g;
}

PowerFit fit_power_law(const std::vector<ScanPoint>& points, double lo, double hi) {
  std::vector<double> xs, ys;
  for (const auto& p : points)
    if (p.mean >= lo && p.mean <= hi && p.mean > 1e-15) {
      xs.push_back(std::log10(p.t));
      ys.push_back(std::log10(p.mean));
    }
  if (xs.size() < 2) throw NumericError("too few points in the fit window");
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  PowerFit fit;
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.exponent * sx) / n;
  fit.points = static_cast<int>(xs.size());
  fit.t_lo = std::pow(10.0, *std::min_element(xs.begin(), xs.end()));
  fit.t_hi = std::pow(10.0, *std::max_element(xs.begin(), xs.end()));
  return fit;
}

ScanResult error_scan(const Artifact& art, int k_max, const ScanOptions& opts) {
  if (opts.t_grid.empty() || opts.samples < 1) throw ValidationError("empty scan");
  const Artifact trunc = truncate_order(art, k_max);
  const PolynomialEvaluator eval(trunc.tensor);
  const int m = trunc.tensor.params.m;
  const Eigen::Index dim = art.a.rows();

  // Samples are shared across the t grid: sample i always uses the same state
  // and the same control coefficients.
  std::vector<ComplexVector> states;
  std::vector<std::vector<double>> controls;
  for (int s = 0; s < opts.samples; ++s) {
    states.push_back(haar_state(dim, derive_seed(opts.seed, 1, static_cast<std::uint64_t>(s))));
    std::mt19937_64 rng(derive_seed(opts.seed, 2, static_cast<std::uint64_t>(s)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> d(static_cast<std::size_t>(m) + 1);
    for (auto& v : d) v = u(rng);
    controls.push_back(std::move(d));
  }

  ScanResult out;
  out.k_max = k_max;
  const auto n_t = static_cast<std::ptrdiff_t>(opts.t_grid.size());
  const auto total = n_t * opts.samples;
  out.rows.resize(static_cast<std::size_t>(total));
  std::vector<int> warn(static_cast<std::size_t>(total), 0);
  std::exception_ptr failure;

  auto task = [&](std::ptrdiff_t idx) {
    const auto ti = static_cast<std::size_t>(idx / opts.samples);
    const int s = static_cast<int>(idx % opts.samples);
    const double t = opts.t_grid[ti];
    const auto& d = controls[static_cast<std::size_t>(s)];
    RealMatrix slices;
    eval.eval_slices(t, d, slices);
    const RealVector a = slices.rowwise().sum();
    const ComplexVector psi_m = Propagator(trunc.basis, a).apply(states[static_cast<std::size_t>(s)]);
    const OdeResult ref = ode_reference(art.a, art.b, d, t, states[static_cast<std::size_t>(s)]);
    const double eps = (psi_m - ref.psi).norm();
    out.rows[static_cast<std::size_t>(idx)] = {t, s, eps, eps <= 1e-15};
    if (!check_convergence(art.a, art.b, t, d).ok) warn[static_cast<std::size_t>(idx)] = 1;
  };

  if (opts.exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
      try {
        task(idx);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::ptrdiff_t idx = 0; idx < total; ++idx) task(idx);
  }

  for (int w : warn) out.convergence_warnings += w;
  for (std::ptrdiff_t ti = 0; ti < n_t; ++ti) {
    ScanPoint p{opts.t_grid[static_cast<std::size_t>(ti)], 0.0, INFINITY, 0.0};
    for (int s = 0; s < opts.samples; ++s) {
      const double e = out.rows[static_cast<std::size_t>(ti * opts.samples + s)].eps;
      p.mean += e / opts.samples;
      p.min = std::min(p.min, e);
      p.max = std::max(p.max, e);
    }
    out.points.push_back(p);
  }
  out.fit = fit_power_law(out.points, opts.fit_lo, opts.fit_hi);
  return out;
}

void write_scan_csv(const ScanResult& r, std::ostream& os) {
  os << "t,sample_id,eps_me,eps_floor_flag\n" << std::setprecision(17);
  for (const auto& row : r.rows)
    os << row.t << ',' << row.sample << ',' << row.eps << ',' << (row.floor ? 1 : 0) << '\n';
  os << "# fit k_M=" << r.k_max << " k_app=" << r.fit.exponent << " points=" << r.fit.points
     << " t_lo=" << r.fit.t_lo << " t_hi=" << r.fit.t_hi
     << " convergence_warnings=" << r.convergence_warnings << '\n';
}

}  // namespace magpoly
