// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
// Usage: magpoly_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "magpoly/artifact.hpp"
#include "magpoly/hermitian.hpp"
#include "magpoly/magnus_eval.hpp"
#include "magpoly/magnus_grad.hpp"
#include "magpoly/models.hpp"
#include "magpoly/opt_control.hpp"
#include "magpoly/spline.hpp"
#include "magpoly/verify.hpp"

using namespace magpoly;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

ComplexMatrix random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (m + m.adjoint());
}

ComplexMatrix pauli(char which) {
  ComplexMatrix m(2, 2);
  if (which == 'x') m << 0, 1, 1, 0;
  else m << 1, 0, 0, -1;
  return m;
}

// Worst unitarity and Hermiticity defects seen by every criterion that
// assembles an effective Hamiltonian or a propagator.
struct Defects {
  double unitarity = 0.0, hermiticity = 0.0;
  long checks = 0;
  void add(const ComplexMatrix& m) {
    hermiticity = std::max(hermiticity, hermiticity_defect(m));
    const ComplexMatrix u = Propagator(m).matrix();
    add_unitary(u);
  }
  void add_unitary(const ComplexMatrix& u) {
    const auto n = u.rows();
    unitarity = std::max(unitarity, (u.adjoint() * u - ComplexMatrix::Identity(n, n)).norm());
    ++checks;
  }
} g_defects;

ComplexMatrix compiled_m(const Artifact& art, double t, const std::vector<double>& d) {
  ComplexMatrix m = assemble(art.basis, eval_coeffs(art.tensor, t, d)).op;
  g_defects.add(m);
  return m;
}

// 1. compiled tensors vs nested quadrature at third order
Outcome oracle_equivalence() {
  std::mt19937_64 rng(1001);
  struct Case {
    std::string name;
    ComplexMatrix a, b;
  };
  std::vector<Case> cases{{"Z/X", pauli('z'), pauli('x')},
                          {"random 2-qubit", random_hermitian(4, rng), random_hermitian(4, rng)}};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  std::ostringstream os;
  for (const auto& c : cases) {
    const Artifact art = build_artifact(HermitianOperator(c.a), HermitianOperator(c.b), {3, 9, 2});
    double w = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double t = 0.4 * (0.5 * (u(rng) + 1.0)) + 1e-3;
      const std::vector<double> d{u(rng), u(rng), u(rng)};
      const ComplexMatrix ref = quadrature_oracle(c.a, c.b, d, t, 3);
      w = std::max(w, (compiled_m(art, t, d) - ref).norm() / ref.norm());
    }
    os << c.name << " max rel err " << fmt("%.2e", w) << "; ";
    worst = std::max(worst, w);
  }
  return {worst <= 1e-7, os.str() + "gate 1e-7"};
}

// 2. constant control: all higher orders cancel
Outcome constant_cancellation() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double t = 0.3;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const ComplexMatrix a = random_hermitian(4, rng), b = random_hermitian(4, rng);
    const Artifact art = build_artifact(HermitianOperator(a), HermitianOperator(b), {6, 6, 0});
    const double d0 = u(rng);
    const ComplexMatrix m = compiled_m(art, t, {d0});
    worst = std::max(worst, (m - t * (a + d0 * b)).norm());
  }
  return {worst <= 1e-12, "max ||M6 - t(A + d0 B)||_F " + fmt("%.2e", worst) + ", gate 1e-12"};
}

// 3. apparent error order k_M + 3 at even orders
Outcome error_scaling() {
  const Model model = build_model({ModelKind::sparse, 3});
  const auto t0 = Clock::now();
  const Artifact art = build_artifact(model.a, model.b, {6, 14, 3});
  const double build_s = since(t0);
  ScanOptions opts;
  opts.t_grid = log_grid(3e-2, 1.0, 20);
  opts.samples = 20;
  opts.seed = 3;
  bool ok = true;
  std::ostringstream os;
  for (int k : {2, 4, 6}) {
    const ScanResult r = error_scan(art, k, opts);
    const bool good = std::abs(r.fit.exponent - (k + 3)) <= 0.5;
    ok = ok && good;
    os << "k_M=" << k << " k_app " << fmt("%.3f", r.fit.exponent) << " (" << r.fit.points << " pts); ";
  }
  os << "artifact " << fmt("%.1f", build_s) << " s";
  return {ok, os.str()};
}

// 4. median coefficient evaluation latency
Outcome latency() {
  const Model model = build_model({ModelKind::sparse, 4});
  const auto tb = Clock::now();
  const Artifact art = build_artifact(model.a, model.b, {10, 12, 3});
  const double build_s = since(tb);
  std::mt19937_64 rng(1004);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> times;
  const auto t_run = Clock::now();
  for (int i = 0; i < 201; ++i) {
    const std::vector<double> d{u(rng), u(rng), u(rng), u(rng)};
    const double t = 0.5 * (u(rng) + 1.0);
    const auto t0 = Clock::now();
    const auto slices = eval_coeffs(art.tensor, t, d);
    times.push_back(since(t0));
    if (slices.empty()) return {false, "no slices"};
  }
  std::nth_element(times.begin(), times.begin() + 100, times.end());
  const double median = times[100];
  const double run_s = since(t_run);
  std::ostringstream os;
  os << "median eval_coeffs " << fmt("%.1f", median * 1e6) << " us (dim_g " << art.basis.size() << ", "
     << art.tensor.entries.size() << " entries), gate 10 ms; artifact " << fmt("%.1f", build_s) << " s";
  return {median <= 1e-2 && run_s <= 60.0, os.str()};
}

HermiteSpline wavy_spline(int S, double T, double amp) {
  return sample_spline(
      [amp](double t, int l) { return l == 0 ? amp * std::sin(1.3 * t) + 0.2 : amp * 1.3 * std::cos(1.3 * t); }, 1,
      S, T);
}

// 5. analytic derivatives vs central differences
Outcome gradients() {
  const Model model = build_model({ModelKind::rydberg, 2});
  const auto art = std::make_shared<const Artifact>(build_artifact(model.a, model.b, {6, 10, 3}));
  const GradTensors gt = build_grad_tensors(art->tensor);
  auto total = [&](double t, const std::vector<double>& d) {
    RealVector s = RealVector::Zero(static_cast<Eigen::Index>(art->basis.size()));
    for (const auto& x : eval_coeffs(art->tensor, t, d)) s += x;
    return s;
  };
  std::mt19937_64 rng(1005);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_a = 0.0;
  const double h = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> d(4);
    for (auto& x : d) x = u(rng);
    const double t = 0.2 + 0.05 * trial;
    const RealVector fd_t = (total(t + h, d) - total(t - h, d)) / (2 * h);
    worst_a = std::max(worst_a, (d_a_dt(gt, t, d) - fd_t).norm() / fd_t.norm());
    for (int alpha = 0; alpha < 4; ++alpha) {
      auto dp = d, dm = d;
      dp[alpha] += h;
      dm[alpha] -= h;
      const RealVector fd = (total(t, dp) - total(t, dm)) / (2 * h);
      worst_a = std::max(worst_a, (d_a_dd(gt, t, d, alpha) - fd).norm() / fd.norm());
    }
  }

  ProblemSettings ps;
  ps.lambda_t = 1e-3;
  const ControlProblem p = make_ckp_problem(art, 2, kPi, ps);
  const HermiteSpline sp = wavy_spline(8, 3.2, 0.9);
  const double theta = 0.4;
  const GradientResult g = gradient(p, sp, theta);
  const RealVector x = sp.to_parameters();
  RealVector fd(x.size() + 1), an(x.size() + 1);
  const double e = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    RealVector xp = x, xm = x;
    xp[i] += e;
    xm[i] -= e;
    HermiteSpline hp = sp, hm = sp;
    hp.set_parameters(xp);
    hm.set_parameters(xm);
    fd[i] = (cost(p, hp, theta).total - cost(p, hm, theta).total) / (2 * e);
  }
  fd[x.size()] = (cost(p, sp, theta + e).total - cost(p, sp, theta - e).total) / (2 * e);
  an << g.dh, g.dtheta;
  const double rel = (an - fd).norm() / fd.norm();
  std::ostringstream os;
  os << "da/dt, da/dd max rel " << fmt("%.2e", worst_a) << " (gate 1e-6); cost gradient rel " << fmt("%.2e", rel)
     << " over " << fd.size() << " params (gate 1e-5)";
  return {worst_a <= 1e-6 && rel <= 1e-5, os.str()};
}

// 6. unitarity and Hermiticity over random models, orders and pulses
Outcome unitarity() {
  std::mt19937_64 rng(1006);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int dim : {2, 3, 4, 6}) {
    const ComplexMatrix a = random_hermitian(dim, rng), b = random_hermitian(dim, rng);
    const Artifact art = build_artifact(HermitianOperator(a), HermitianOperator(b), {5, 8, 3});
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> d{u(rng), u(rng), u(rng), u(rng)};
      compiled_m(art, 0.6 * (u(rng) + 1.0), d);
    }
  }
  for (int n : {2, 3}) {
    const Model model = build_model({ModelKind::rydberg, n});
    const Artifact art = build_artifact(model.a, model.b, {8, 12, 3});
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> d{u(rng), u(rng), u(rng), u(rng)};
      compiled_m(art, 0.5 * (u(rng) + 1.0), d);
    }
    g_defects.add_unitary(pulse_evolution(art, wavy_spline(12, 6.0, 0.8)));
  }
  std::ostringstream os;
  os << "max ||U^dag U - I|| " << fmt("%.2e", g_defects.unitarity) << ", max Hermiticity defect "
     << fmt("%.2e", g_defects.hermiticity) << " over " << g_defects.checks << " checks, gate 1e-12";
  return {g_defects.unitarity <= 1e-12 && g_defects.hermiticity <= 1e-12, os.str()};
}

HermiteSpline random_spline(int L, int S, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.2, 0.8);
  HermiteSpline h;
  h.L = L;
  h.dt.resize(S);
  for (auto& x : h.dt) x = w(rng);
  h.nodes = RealMatrix(S + 1, L + 1);
  for (Eigen::Index i = 0; i < h.nodes.size(); ++i) h.nodes.data()[i] = u(rng);
  return h;
}

// 7. spline continuity, Jacobian and exact resampling
Outcome splines() {
  double cont = 0.0, jac = 0.0, res = 0.0;
  for (int L : {0, 1, 2, 3}) {
    const HermiteSpline h = random_spline(L, 7, 70 + L);
    const auto segs = spline_to_segments(h);
    for (int s = 0; s < h.segments(); ++s)
      for (int l = 0; l <= L; ++l) {
        cont = std::max(cont, std::abs(segment_derivative(segs[s].d, 0.0, l) - h.nodes(s, l)));
        cont = std::max(cont, std::abs(segment_derivative(segs[s].d, segs[s].dt, l) - h.nodes(s + 1, l)));
      }
    if (L == 0) continue;
    const RealMatrix jd = spline_jacobian_dense(h);
    const RealVector x = h.to_parameters();
    const int width = h.degree() + 2;
    auto coords = [&](const HermiteSpline& sp) {
      const auto ss = spline_to_segments(sp);
      RealVector c(width * sp.segments());
      for (int s = 0; s < sp.segments(); ++s) {
        c[s * width] = ss[s].dt;
        c.segment(s * width + 1, width - 1) = ss[s].d;
      }
      return c;
    };
    const double e = 1e-6;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      RealVector xp = x, xm = x;
      xp[i] += e;
      xm[i] -= e;
      HermiteSpline hp = h, hm = h;
      hp.set_parameters(xp);
      hm.set_parameters(xm);
      const RealVector fd = (coords(hp) - coords(hm)) / (2 * e);
      jac = std::max(jac, (jd.col(i) - fd).norm() / std::max(1.0, fd.norm()));
    }
    for (const HermiteSpline& r : {resample(h, 11), resample_uniform(h, 3)}) {
      const auto after = spline_to_segments(r);
      for (int i = 0; i <= 500; ++i) {
        const double t = h.duration() * i / 500.0;
        res = std::max(res, std::abs(pulse_value(after, t) - pulse_value(segs, t)));
      }
    }
  }
  std::ostringstream os;
  os << "continuity " << fmt("%.1e", cont) << " (1e-10), Jacobian vs FD " << fmt("%.1e", jac)
     << " (1e-7), resampling " << fmt("%.1e", res) << " (1e-12)";
  return {cont <= 1e-10 && jac <= 1e-7 && res <= 1e-12, os.str()};
}

HermiteSpline cos_pulse(int S, double T) {
  const double w = 2.0 * kPi / 3.0;
  return sample_spline([w](double t, int l) { return l == 0 ? 0.1 * std::cos(w * t) : -0.1 * w * std::sin(w * t); },
                       1, S, T);
}

std::string starts_summary(const MultiStartResult& ms) {
  std::ostringstream os;
  os << ms.starts.size() << " theta starts, winner theta0 " << fmt("%.4f", ms.starts[ms.best_index].theta0);
  return os.str();
}

// 8. C2Z milestone
Outcome c2z_milestone() {
  const Model model = build_model({ModelKind::rydberg, 3});
  const auto art = std::make_shared<const Artifact>(build_artifact(model.a, model.b, {8, 12, 3}));
  ProblemSettings ps;
  ps.t_min = 4.0;
  ps.t_max = 18.0;
  ps.lambda_t = 1e-3;
  ps.eps_star = 1e-6;
  const ControlProblem p = make_ckp_problem(art, 3, kPi, ps);
  MinimizeOptions mo;
  mo.max_iter = 1000;
  mo.j_target = 1e-3;
  const auto t0 = Clock::now();
  const MultiStartResult ms = minimize_theta_starts(p, cos_pulse(21, 9.0), 0.0, 16, mo);
  const double wall = since(t0);
  const auto& r = ms.best;
  g_defects.add_unitary(pulse_evolution(*art, r.spline));
  std::ostringstream os;
  os << "J " << fmt("%.3e", r.final_cost.j) << " (gate 1e-3), T " << fmt("%.2f", r.final_cost.duration) << ", S "
     << r.spline.segments() << ", " << r.iterations << " iterations, " << to_string(r.status) << ", "
     << starts_summary(ms) << ", " << fmt("%.0f", wall) << " s; reference T 11.5, J 5e-6 (not gated)";
  return {r.final_cost.j <= 1e-3 && wall <= 4 * 3600.0, os.str()};
}

// 9. first two warm-started stages of the C4P sweep
constexpr double kSweepBudgetSeconds = 4 * 3600.0;

Outcome c4p_sweep() {
  const Model model = build_model({ModelKind::rydberg, 5});
  const auto art = std::make_shared<const Artifact>(build_artifact(model.a, model.b, {8, 12, 3}));
  SweepOptions so;
  SweepStage st;
  st.eps_star = 1e-4;
  st.lambda_t = 0.0;
  // A narrow window keeps T from collapsing toward T_min between stages.
  st.t_min = 10.0;
  st.t_max = 16.0;
  st.max_iter = 8000;
  st.j_target = 1e-3;
  so.stages = {st};
  const auto t0 = Clock::now();
  const auto results = sweep_ckp(art, 5, {0.1 * kPi, 0.2 * kPi}, cos_pulse(21, 13.0), kPi, so);
  const double wall = since(t0);
  bool ok = results.size() == 2;
  std::ostringstream os;
  for (const auto& sr : results) {
    const bool good = sr.error.empty() && sr.result.final_cost.j <= 1e-3;
    ok = ok && good;
    os << "phi/pi " << fmt("%.1f", sr.phi / kPi) << ": J " << fmt("%.3e", sr.result.final_cost.j) << " T "
       << fmt("%.2f", sr.result.final_cost.duration) << " " << sr.result.iterations << " it"
       << (sr.error.empty() ? "" : " error: " + sr.error) << "; ";
  }
  os << fmt("%.0f", wall) << " s of " << fmt("%.0f", kSweepBudgetSeconds) << " s budget (gate 1e-3 each)";
  return {ok && wall <= kSweepBudgetSeconds, os.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "oracle equivalence", 60, oracle_equivalence},
      {2, "constant-control cancellation", 60, constant_cancellation},
      {3, "error scaling k_app = k_M + 3", 600, error_scaling},
      {4, "evaluation latency", 600, latency},
      {5, "gradient correctness", 300, gradients},
      {6, "unitarity and Hermiticity", 60, unitarity},
      {7, "spline suite", 60, splines},
      {8, "C2Z milestone", 4 * 3600, c2z_milestone},
      {9, "C4P sweep smoke", kSweepBudgetSeconds, c4p_sweep},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = since(t0);
    const bool pass = o.pass && s <= c.budget_s;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " | "
              << fmt("%.1f", s) << " s (limit " << fmt("%.0f", c.budget_s) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
