#include "magpoly/opt_control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "magpoly/models.hpp"

namespace magpoly {
namespace {

/// Per-segment data shared by cost and gradient.
struct SegmentData {
  SegmentPolynomials segs;
  std::vector<RealVector> a;
  std::vector<Propagator> props;
  std::vector<double> eps;
};

SegmentData propagate_segments(const ControlProblem& p, const HermiteSpline& h) {
  if (h.degree() > p.artifact().tensor.params.m)
    throw ValidationError("spline degree " + std::to_string(h.degree()) +
                          " exceeds the artifact control degree");
  SegmentData sd;
  sd.segs = spline_to_segments(h);
  const int S = h.segments();
  sd.a.resize(S);
  sd.props.resize(S);
  sd.eps.resize(S);
  const auto& eval = p.evaluator();
  const auto& basis = p.artifact().basis;
  const bool par = p.settings().exec == Execution::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
  for (int s = 0; s < S; ++s) {
    RealMatrix slices;
    const RealVector& d = sd.segs[s].d;
    eval.eval_slices(sd.segs[s].dt, std::span<const double>(d.data(), d.size()), slices);
    sd.a[s] = slices.rowwise().sum();
    sd.eps[s] = truncation_error(slices.col(slices.cols() - 1), p.l1_norms());
    sd.props[s] = Propagator(basis, sd.a[s]);
  }
  return sd;
}

ComplexVector apply_rz(const RealVector& g, double theta, const ComplexVector& psi, bool adjoint) {
  ComplexVector out(psi.size());
  const double sign = adjoint ? 1.0 : -1.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    out[i] = std::exp(cplx(0.0, sign * theta * g[i])) * psi[i];
  return out;
}

void fill_cost(const ControlProblem& p, const HermiteSpline& h, const SegmentData& sd,
               CostResult& c) {
  c.duration = h.duration();
  c.eps = sd.eps;
  c.sum_eps = 0.0;
  for (double e : sd.eps) c.sum_eps += e;
  c.j = 0.0;
  for (const auto& ov : c.overlaps) c.j += 0.5 * (1.0 - ov.real());
  c.j_t = p.settings().lambda_t * c.duration;
  c.total = c.j + c.j_t;
}

}  // namespace

ControlProblem::ControlProblem(std::shared_ptr<const Artifact> artifact,
                               const ComplexMatrix& target, std::vector<ComplexVector> states,
                               RealVector rz_generator, ProblemSettings settings)
    : artifact_(std::move(artifact)), psi_(std::move(states)), rz_(std::move(rz_generator)),
      settings_(settings) {
  if (!artifact_) throw ValidationError("control problem needs an artifact");
  const Eigen::Index dim = artifact_->basis.hilbert_dim();
  if (target.rows() != dim || target.cols() != dim) throw ValidationError("target dimension mismatch");
  if (rz_.size() != dim) throw ValidationError("R_Z generator dimension mismatch");
  if (psi_.empty()) throw ValidationError("no trajectories");
  if (!(settings_.t_min >= 0.0) || !(settings_.t_max > settings_.t_min))
    throw ValidationError("duration bounds must satisfy 0 <= T_min < T_max");
  if (!(settings_.eps_star > 0.0)) throw ValidationError("eps_* must be positive");
  if (settings_.lambda_t < 0.0) throw ValidationError("lambda_T must be non-negative");
  if (settings_.max_segments < 1) throw ValidationError("segment cap must be positive");
  for (auto& psi : psi_) {
    if (psi.size() != dim) throw ValidationError("trajectory dimension mismatch");
    if (std::abs(psi.norm() - 1.0) > 1e-10) throw ValidationError("trajectory states must be normalized");
    phi_.push_back(target * psi);
  }
  const auto& norms = artifact_->basis.l1_norms;
  l1_ = Eigen::Map<const RealVector>(norms.data(), static_cast<Eigen::Index>(norms.size()));
  eval_ = PolynomialEvaluator(artifact_->tensor);
  grad_ = GradientEvaluator(build_grad_tensors(artifact_->tensor));
}

int ControlProblem::k_d() const noexcept {
  return settings_.k_d >= 0 ? settings_.k_d : artifact_->tensor.params.k_max;
}

void ControlProblem::bounds(const HermiteSpline& h, RealVector& lo, RealVector& hi) const {
  const auto n = static_cast<Eigen::Index>(h.parameter_count()) + 1;
  const double inf = std::numeric_limits<double>::infinity();
  lo = RealVector::Constant(n, -inf);
  hi = RealVector::Constant(n, inf);
  const int S = h.segments();
  for (int s = 0; s < S; ++s) {
    const auto i = static_cast<Eigen::Index>(h.dt_index(s));
    // a zero-length segment is not a valid spline, so keep a small floor
    lo[i] = std::max(settings_.t_min / S, 1e-9);
    hi[i] = settings_.t_max / S;
  }
}

bool ControlProblem::feasible(const HermiteSpline& h, double slack) const {
  const int S = h.segments();
  for (double dt : h.dt)
    if (dt < settings_.t_min / S - slack || dt > settings_.t_max / S + slack) return false;
  return true;
}

ControlProblem make_ckp_problem(std::shared_ptr<const Artifact> artifact, int n, double phi,
                                ProblemSettings settings) {
  return ControlProblem(std::move(artifact), ckp_gate(n, phi, 3), symmetric_basis_states(n, 3),
                        rz_generator(n, 3), settings);
}

ComplexMatrix pulse_evolution(const Artifact& art, const HermiteSpline& h) {
  if (h.degree() > art.tensor.params.m) throw ValidationError("spline degree exceeds the artifact control degree");
  const PolynomialEvaluator eval(art.tensor);
  const auto segs = spline_to_segments(h);
  const Eigen::Index dim = art.a.rows();
  ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
  for (const auto& seg : segs) {
    RealMatrix slices;
    eval.eval_slices(seg.dt, std::span<const double>(seg.d.data(), seg.d.size()), slices);
    u = (Propagator(art.basis, slices.rowwise().sum()).matrix() * u).eval();
  }
  return u;
}

CostResult cost(const ControlProblem& p, const HermiteSpline& h, double theta) {
  h.validate();
  const SegmentData sd = propagate_segments(p, h);
  const auto& psi0 = p.initial_states();
  const auto& phi = p.target_states();
  const int R = static_cast<int>(psi0.size());
  CostResult c;
  c.overlaps.resize(R);
  const bool par = p.settings().exec == Execution::parallel;
#pragma omp parallel for if (par)
  for (int r = 0; r < R; ++r) {
    ComplexVector psi = psi0[r];
    for (const auto& u : sd.props) psi = u.apply(psi);
    c.overlaps[r] = phi[r].dot(apply_rz(p.rz_generator(), theta, psi, false));
  }
  fill_cost(p, h, sd, c);
  return c;
}

GradientResult gradient(const ControlProblem& p, const HermiteSpline& h, double theta) {
  h.validate();
  const SegmentData sd = propagate_segments(p, h);
  const auto& psi0 = p.initial_states();
  const auto& phi = p.target_states();
  const auto& g = p.rz_generator();
  const int R = static_cast<int>(psi0.size());
  const int S = h.segments();
  const bool par = p.settings().exec == Execution::parallel;

  // fwd[r][s] = D_s..D_1 psi_r, bwd[r][s] = (R_Z D_S..D_{s+1})^dagger phi_r
  std::vector<std::vector<ComplexVector>> fwd(R), bwd(R);
  GradientResult out;
  out.cost.overlaps.resize(R);
  std::vector<double> dtheta(R, 0.0);
#pragma omp parallel for if (par)
  for (int r = 0; r < R; ++r) {
    fwd[r].resize(S + 1);
    bwd[r].resize(S + 1);
    fwd[r][0] = psi0[r];
    for (int s = 0; s < S; ++s) fwd[r][s + 1] = sd.props[s].apply(fwd[r][s]);
    const ComplexVector u_psi = apply_rz(g, theta, fwd[r][S], false);
    out.cost.overlaps[r] = phi[r].dot(u_psi);
    dtheta[r] = -0.5 * phi[r].dot(g.cast<cplx>().cwiseProduct(u_psi)).imag();
    bwd[r][S] = apply_rz(g, theta, phi[r], true);
    for (int s = S; s > 0; --s) bwd[r][s - 1] = sd.props[s - 1].apply_adjoint(bwd[r][s]);
  }
  fill_cost(p, h, sd, out.cost);
  for (double v : dtheta) out.dtheta += v;

  const auto& art = p.artifact();
  const auto& basis = art.basis;
  const auto dim_g = static_cast<Eigen::Index>(basis.size());
  const int cols = art.tensor.params.m + 2;
  const int ncoef = h.degree() + 1;
  const int k_d = p.k_d();
  // dJ/dc_s, columns (dt, d_0..d_m) with m the artifact degree
  RealMatrix dj_dc(cols, S);

#pragma omp parallel for schedule(dynamic) if (par)
  for (int s = 0; s < S; ++s) {
    const RealVector& d = sd.segs[s].d;
    RealMatrix jac;
    p.gradient_evaluator().jacobian(sd.segs[s].dt, std::span<const double>(d.data(), d.size()), jac);
    if (art.sc.closed()) {
      // G_mu = sum_r Im <b_{s-1}| L_mu |psi_{s-1}>; dJ/dc = -1/2 (P^T G) . da/dc
      RealVector gvec(dim_g);
      for (Eigen::Index mu = 0; mu < dim_g; ++mu) {
        double acc = 0.0;
        for (int r = 0; r < R; ++r)
          acc += bwd[r][s].dot(basis.sparse[mu] * fwd[r][s]).imag();
        gvec[mu] = acc;
      }
      const RealMatrix adt = art.sc.adjoint_matrix(sd.a[s]).transpose();
      RealVector term = gvec, w = gvec;
      double coeff = 1.0;
      for (int k = 1; k <= k_d; ++k) {
        term = adt * term;
        coeff *= -1.0 / (k + 1);
        w += coeff * term;
      }
      dj_dc.col(s) = -0.5 * (jac.transpose() * w);
    } else {
      // dJ/dc = -1/2 Im tr(series(dM) Z) with Z = sum_r psi b^dagger
      ComplexMatrix z = ComplexMatrix::Zero(basis.hilbert_dim(), basis.hilbert_dim());
      for (int r = 0; r < R; ++r) z += fwd[r][s] * bwd[r][s].adjoint();
      const ComplexMatrix m = assemble_operator(basis, sd.a[s]);
      for (int c = 0; c < cols; ++c) {
        const ComplexMatrix series =
            adjoint_series_dense(m, assemble_operator(basis, RealVector(jac.col(c))), k_d);
        dj_dc(c, s) = -0.5 * (series * z).trace().imag();
      }
    }
  }

  // pull back through the spline coordinates
  out.dh = RealVector::Zero(static_cast<Eigen::Index>(h.parameter_count()));
  const auto sj = spline_jacobian(h);
  const int L = h.L;
  for (int s = 0; s < S; ++s) {
    const RealVector dj_dd = dj_dc.col(s).segment(1, ncoef);
    out.dh[static_cast<Eigen::Index>(h.dt_index(s))] +=
        dj_dc(0, s) + sj[s].dd_ddt.dot(dj_dd) + p.settings().lambda_t;
    const RealVector dj_dnodes = sj[s].dd_dh.transpose() * dj_dd;
    for (int q = 0; q < 2 * (L + 1); ++q) {
      const int node = s + q / (L + 1);
      out.dh[static_cast<Eigen::Index>(h.node_index(node, q % (L + 1)))] += dj_dnodes[q];
    }
  }
  return out;
}

BoxLbfgs::BoxLbfgs(Objective f, RealVector x0, RealVector lo, RealVector hi, LbfgsOptions opts)
    : fn_(std::move(f)), x_(std::move(x0)), lo_(std::move(lo)), hi_(std::move(hi)), opts_(opts) {
  if (lo_.size() != x_.size() || hi_.size() != x_.size()) throw ValidationError("bound size mismatch");
  if ((lo_.array() > hi_.array()).any()) throw ValidationError("empty box");
  x_ = x_.cwiseMax(lo_).cwiseMin(hi_);
  f_ = eval(x_, g_);
}

double BoxLbfgs::eval(const RealVector& x, RealVector& g) {
  ++evals_;
  const double f = fn_(x, g);
  if (!std::isfinite(f) || !g.allFinite()) throw NumericError("objective returned a non-finite value");
  return f;
}

std::vector<bool> BoxLbfgs::active_set() const {
  std::vector<bool> active(static_cast<std::size_t>(x_.size()));
  for (Eigen::Index i = 0; i < x_.size(); ++i)
    active[i] = (x_[i] <= lo_[i] && g_[i] > 0.0) || (x_[i] >= hi_[i] && g_[i] < 0.0);
  return active;
}

double BoxLbfgs::projected_gradient_norm() const {
  const RealVector moved = (x_ - g_).cwiseMax(lo_).cwiseMin(hi_);
  return (moved - x_).norm();
}

RealVector BoxLbfgs::direction(const std::vector<bool>& active) const {
  RealVector q = g_;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (active[i]) q[i] = 0.0;
  const int k = static_cast<int>(s_.size());
  std::vector<double> alpha(k), rho(k);
  for (int i = k - 1; i >= 0; --i) {
    rho[i] = 1.0 / y_[i].dot(s_[i]);
    alpha[i] = rho[i] * s_[i].dot(q);
    q -= alpha[i] * y_[i];
  }
  if (k > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
  for (int i = 0; i < k; ++i) {
    const double beta = rho[i] * y_[i].dot(q);
    q += (alpha[i] - beta) * s_[i];
  }
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (active[i]) q[i] = 0.0;
  return -q;
}

void BoxLbfgs::accept(const RealVector& xn, double fn, const RealVector& gn) {
  const RealVector dx = xn - x_;
  const RealVector dg = gn - g_;
  const double sy = dx.dot(dg);
  if (sy > 1e-12 * dx.norm() * dg.norm() && sy > 0.0) {
    s_.push_back(dx);
    y_.push_back(dg);
    if (static_cast<int>(s_.size()) > opts_.memory) {
      s_.erase(s_.begin());
      y_.erase(y_.begin());
    }
  }
  x_ = xn;
  f_ = fn;
  g_ = gn;
}

namespace {

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), kept inside the
// middle 80% of the interval; bisection when the cubic has no real minimizer.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b), w = hi - lo;
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (db + d2 - d1) / denom;
  }
  if (!std::isfinite(t)) t = 0.5 * (a + b);
  return std::clamp(t, lo + 0.1 * w, hi - 0.1 * w);
}

}  // namespace

bool BoxLbfgs::wolfe_search(const RealVector& p) {
  // largest feasible step along p
  double amax = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) amax = std::min(amax, (lo_[i] - x_[i]) / p[i]);
    else if (p[i] > 0.0) amax = std::min(amax, (hi_[i] - x_[i]) / p[i]);
  }
  if (!(amax > 0.0)) return false;
  const double f0 = f_, d0 = g_.dot(p);
  const double c1 = opts_.armijo, c2 = opts_.wolfe;
  struct Point {
    double a, f, d;
    RealVector g;
  };
  int evals = 0;
  auto probe = [&](double a) {
    Point pt;
    pt.a = a;
    const RealVector xn = (x_ + a * p).cwiseMax(lo_).cwiseMin(hi_);
    pt.f = eval(xn, pt.g);
    pt.d = pt.g.dot(p);
    ++evals;
    return pt;
  };
  auto take = [&](const Point& pt) {
    accept((x_ + pt.a * p).cwiseMax(lo_).cwiseMin(hi_), pt.f, pt.g);
    return true;
  };
  auto zoom = [&](Point lo, Point hi) {
    while (evals < opts_.max_line_evals) {
      const Point pt = probe(cubic_step(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d));
      if (pt.f > f0 + c1 * pt.a * d0 || pt.f >= lo.f) {
        hi = pt;
      } else {
        if (std::abs(pt.d) <= -c2 * d0) return take(pt);
        if (pt.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = pt;
      }
      if (std::abs(hi.a - lo.a) <= 1e-14 * std::max(1.0, lo.a)) break;
    }
    // lo always satisfies sufficient decrease; accept it if it moved
    if (lo.a > 0.0) return take(lo);
    return false;
  };

  Point prev{0.0, f0, d0, g_};
  double a = std::min(s_.empty() ? std::min(1.0, 1.0 / p.norm()) : 1.0, amax);
  while (evals < opts_.max_line_evals) {
    const Point pt = probe(a);
    if (pt.f > f0 + c1 * a * d0 || (prev.a > 0.0 && pt.f >= prev.f)) return zoom(prev, pt);
    if (std::abs(pt.d) <= -c2 * d0) return take(pt);
    if (pt.d >= 0.0) return zoom(pt, prev);
    if (a >= amax) return take(pt);  // box edge, still descending
    prev = pt;
    a = std::min(2.0 * a, amax);
  }
  return prev.a > 0.0 ? take(prev) : false;
}

bool BoxLbfgs::projected_backtrack(const RealVector& p) {
  double alpha = s_.empty() ? std::min(1.0, 1.0 / p.norm()) : 1.0;
  for (int bt = 0; bt < opts_.max_backtracks; ++bt, alpha *= 0.5) {
    const RealVector xn = (x_ + alpha * p).cwiseMax(lo_).cwiseMin(hi_);
    const double slope = g_.dot(xn - x_);
    if (!(slope < 0.0)) continue;
    RealVector gn;
    const double fn = eval(xn, gn);
    if (fn <= f_ + opts_.armijo * slope) {
      accept(xn, fn, gn);
      return true;
    }
  }
  return false;
}

bool BoxLbfgs::step() {
  const auto active = active_set();
  for (int attempt = 0; attempt < 2; ++attempt) {
    RealVector p = direction(active);
    // components pushing against a bound they already sit on are dropped
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if ((x_[i] <= lo_[i] && p[i] < 0.0) || (x_[i] >= hi_[i] && p[i] > 0.0)) p[i] = 0.0;
    if (g_.dot(p) < 0.0 && (wolfe_search(p) || projected_backtrack(p))) return true;
    if (s_.empty()) {
      // steepest descent along the projected path as the last resort
      RealVector sd = -g_;
      for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (active[i]) sd[i] = 0.0;
      return g_.dot(sd) < 0.0 && projected_backtrack(sd);
    }
    s_.clear();
    y_.clear();
  }
  return false;
}

void OptimizerTrace::write_csv(std::ostream& os) const {
  os << "iter,J,J_T,T,S,dim_h,sum_eps,event\n";
  os << std::setprecision(12);
  for (const auto& r : rows)
    os << r.iter << ',' << r.j << ',' << r.j_t << ',' << r.duration << ',' << r.segments << ','
       << r.dim_h << ',' << r.sum_eps << ',' << r.event << '\n';
}

std::string to_string(OptStatus s) {
  switch (s) {
    case OptStatus::converged: return "converged";
    case OptStatus::target_reached: return "target_reached";
    case OptStatus::max_iter: return "max_iter";
    case OptStatus::plateau: return "plateau";
    case OptStatus::line_search_failed: return "line_search_failed";
  }
  return "?";
}

HermiteSpline resample_for_threshold(const ControlProblem& p, const HermiteSpline& h, int* events) {
  HermiteSpline cur = h;
  const double goal = 0.1 * p.settings().eps_star;
  double sum = cost(p, cur, 0.0).sum_eps;
  while (sum > goal) {
    const int S = cur.segments();
    const int grown = S + (S + 1) / 2;
    if (grown > p.settings().max_segments)
      throw ResourceError("resampling needs more than " + std::to_string(p.settings().max_segments) +
                          " segments");
    HermiteSpline next = resample(cur, grown);
    if (!p.feasible(next)) {
      if (2 * S > p.settings().max_segments)
        throw ResourceError("resampling needs more than " +
                            std::to_string(p.settings().max_segments) + " segments");
      next = resample_uniform(cur, 2);
    }
    cur = std::move(next);
    if (events) ++*events;
    sum = cost(p, cur, 0.0).sum_eps;
  }
  return cur;
}

namespace {

RealVector pack(const HermiteSpline& h, double theta) {
  RealVector x(static_cast<Eigen::Index>(h.parameter_count()) + 1);
  x.head(x.size() - 1) = h.to_parameters();
  x[x.size() - 1] = theta;
  return x;
}

void unpack(const RealVector& x, HermiteSpline& h, double& theta) {
  h.set_parameters(x.head(x.size() - 1));
  theta = x[x.size() - 1];
}

}  // namespace

MinimizeResult minimize(const ControlProblem& p, HermiteSpline h, double theta,
                        const MinimizeOptions& opts) {
  h.validate();
  {
    // start inside the box
    RealVector lo, hi;
    p.bounds(h, lo, hi);
    unpack(pack(h, theta).cwiseMax(lo).cwiseMin(hi), h, theta);
  }
  MinimizeResult res;
  int iter = 0;
  std::string event = "start";
  const auto record = [&](const CostResult& c) {
    TraceRow row{iter, c.j, c.j_t, c.duration, h.segments(), h.parameter_count(), c.sum_eps, event};
    res.trace.rows.push_back(row);
    event.clear();
    return !opts.on_row || opts.on_row(row);
  };

  CostResult c = cost(p, h, theta);
  if (c.sum_eps > p.settings().eps_star) {
    h = resample_for_threshold(p, h, &res.resamples);
    event = "start+resample";
    c = cost(p, h, theta);
  }

  const auto objective = [&p, &h](const RealVector& x, RealVector& g) {
    HermiteSpline trial = h;
    double th = 0.0;
    unpack(x, trial, th);
    const GradientResult gr = gradient(p, trial, th);
    g.resize(x.size());
    g.head(x.size() - 1) = gr.dh;
    g[x.size() - 1] = gr.dtheta;
    return gr.cost.total;
  };

  const auto make_solver = [&] {
    RealVector lo, hi;
    p.bounds(h, lo, hi);
    return BoxLbfgs(objective, pack(h, theta), lo, hi, opts.lbfgs);
  };
  BoxLbfgs solver = make_solver();
  int stall = 0;
  res.status = OptStatus::max_iter;
  bool keep_going = record(c);

  while (keep_going) {
    if (c.j <= c.sum_eps) {
      res.status = OptStatus::converged;
      break;
    }
    if (opts.j_target > 0.0 && c.j <= opts.j_target) {
      res.status = OptStatus::target_reached;
      break;
    }
    if (iter >= opts.max_iter) break;
    const double f_old = solver.f();
    if (!solver.step()) {
      res.status = OptStatus::line_search_failed;
      break;
    }
    ++iter;
    unpack(solver.x(), h, theta);
    c = cost(p, h, theta);
    const double rel = (f_old - solver.f()) / std::max(std::abs(f_old), 1e-300);
    stall = rel < opts.stall_rel ? stall + 1 : 0;
    if (c.sum_eps > p.settings().eps_star) {
      h = resample_for_threshold(p, h, &res.resamples);
      c = cost(p, h, theta);
      event = "resample";
      solver = make_solver();
      stall = 0;
    }
    keep_going = record(c);
    if (stall >= opts.stall_window) {
      res.status = OptStatus::plateau;
      break;
    }
  }
  if (!res.trace.rows.empty() && res.status != OptStatus::max_iter)
    res.trace.rows.back().event += res.trace.rows.back().event.empty() ? to_string(res.status)
                                                                       : "+" + to_string(res.status);
  res.spline = h;
  res.theta = theta;
  res.final_cost = c;
  res.iterations = iter;
  return res;
}

MultiStartResult minimize_theta_starts(const ControlProblem& p, const HermiteSpline& h,
                                       double theta0, int count, const MinimizeOptions& opts) {
  if (count < 1) throw ValidationError("need at least one start");
  MultiStartResult out;
  for (int j = 0; j < count; ++j) {
    const double th = theta0 + 4.0 * std::numbers::pi * j / count;
    MinimizeResult r = minimize(p, h, th, opts);
    out.starts.push_back({th, r.final_cost.j, r.status, r.iterations});
    const bool better = j == 0 || r.final_cost.j < out.best.final_cost.j;
    const bool done = r.status == OptStatus::converged || r.status == OptStatus::target_reached;
    if (better || done) {
      out.best = std::move(r);
      out.best_index = j;
    }
    if (done) break;
  }
  return out;
}

std::vector<SweepStageResult> sweep_ckp(std::shared_ptr<const Artifact> artifact, int n,
                                        const std::vector<double>& phi_grid,
                                        const HermiteSpline& initial, double theta0,
                                        const SweepOptions& opts) {
  if (opts.stages.empty()) throw ValidationError("sweep needs at least one stage");
  for (std::size_t i = 1; i < phi_grid.size(); ++i)
    if (!(phi_grid[i] > phi_grid[i - 1])) throw ValidationError("phi grid must be increasing");
  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);

  std::vector<SweepStageResult> out;
  HermiteSpline good = initial;
  double good_theta = theta0;
  for (double phi : phi_grid) {
    for (std::size_t st = 0; st < opts.stages.size(); ++st) {
      const SweepStage& stage = opts.stages[st];
      SweepStageResult sr;
      sr.phi = phi;
      sr.stage = static_cast<int>(st);
      try {
        ProblemSettings ps = opts.base;
        ps.eps_star = stage.eps_star;
        ps.lambda_t = stage.lambda_t;
        ps.t_min = stage.t_min;
        ps.t_max = stage.t_max;
        const ControlProblem prob = make_ckp_problem(artifact, n, phi, ps);
        MinimizeOptions mo = opts.minimize;
        mo.max_iter = stage.max_iter;
        mo.j_target = stage.j_target;
        sr.result = minimize(prob, good, good_theta, mo);
        sr.ok = sr.result.final_cost.j <= stage.eps_star || sr.result.status == OptStatus::target_reached;
        if (sr.ok) {
          good = sr.result.spline;
          good_theta = sr.result.theta;
        }
        if (!opts.out_dir.empty()) {
          std::ostringstream stem;
          stem << "ckp_phi" << std::fixed << std::setprecision(4) << phi << "_stage" << st;
          std::ofstream pulse(opts.out_dir / (stem.str() + ".spline"));
          write_spline(sr.result.spline, pulse, sr.result.theta);
          std::ofstream trace(opts.out_dir / (stem.str() + ".csv"));
          sr.result.trace.write_csv(trace);
          if (!pulse || !trace) throw FormatError("cannot write sweep output in " + opts.out_dir.string());
        }
      } catch (const FormatError&) {
        throw;
      } catch (const Error& e) {
        sr.ok = false;
        sr.error = e.what();
      }
      out.push_back(std::move(sr));
    }
  }
  return out;
}

}  // namespace magpoly
