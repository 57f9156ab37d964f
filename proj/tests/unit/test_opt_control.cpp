#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "magpoly/models.hpp"
#include "magpoly/opt_control.hpp"
#include "test_util.hpp"

using namespace magpoly;
using namespace magpoly::testing;

namespace {

std::shared_ptr<const Artifact> rydberg2() {
  static const auto art = [] {
    const Model m = build_model({ModelKind::rydberg, 2});
    return std::make_shared<const Artifact>(build_artifact(m.a, m.b, {6, 10, 3}));
  }();
  return art;
}

HermiteSpline constant_spline(int S, double dt, double value = 0.0) {
  HermiteSpline h;
  h.L = 1;
  h.dt.assign(S, dt);
  h.nodes = RealMatrix::Zero(S + 1, 2);
  h.nodes.col(0).setConstant(value);
  return h;
}

HermiteSpline wavy_spline(int S, double T, double amp) {
  return sample_spline(
      [amp](double t, int l) {
        return l == 0 ? amp * std::sin(1.3 * t) + 0.2 : amp * 1.3 * std::cos(1.3 * t);
      },
      1, S, T);
}

/// 1/2 sum_r (1 - Re <psi_r| G^dagger R_Z(theta) exp(-i H T) |psi_r>), dense.
double dense_cost(const ComplexMatrix& gate, const ComplexMatrix& h, double T, double theta, int n) {
  const ComplexMatrix u = rz_product(n, theta, 3) * expm_taylor(cplx(0, -T) * h);
  double j = 0.0;
  for (const auto& psi : symmetric_basis_states(n, 3)) j += 0.5 * (1.0 - (gate * psi).dot(u * psi).real());
  return j;
}

}  // namespace

TEST(Cost, ConstantPulseMatchesDenseOracle) {
  const Model m = build_model({ModelKind::rydberg, 2});
  for (double value : {0.0, 0.8}) {
    const HermiteSpline h = constant_spline(3, 0.4, value);
    const ComplexMatrix hm = m.a.matrix() + value * m.b.matrix();
    // target equal to the drift evolution itself: J vanishes
    const ControlProblem same(rydberg2(), expm_taylor(cplx(0, -1.2) * hm), symmetric_basis_states(2, 3),
                              rz_generator(2, 3));
    const CostResult c0 = cost(same, h, 0.0);
    EXPECT_NEAR(c0.j, 0.0, 1e-12);
    EXPECT_LE(c0.sum_eps, 1e-12);  // constant control: no higher Magnus terms
    const ControlProblem gate = make_ckp_problem(rydberg2(), 2, std::numbers::pi);
    const double theta = 0.37;
    EXPECT_NEAR(cost(gate, h, theta).j, dense_cost(ckp_gate(2, std::numbers::pi, 3), hm, 1.2, theta, 2), 1e-12);
  }
}

TEST(Cost, PulseEvolutionOfConstantPulse) {
  const Model m = build_model({ModelKind::rydberg, 2});
  const HermiteSpline h = constant_spline(4, 0.35, -0.6);
  const ComplexMatrix expect = expm_taylor(cplx(0, -1.4) * (m.a.matrix() - 0.6 * m.b.matrix()));
  EXPECT_LE((pulse_evolution(*rydberg2(), h) - expect).norm(), 1e-12);
}

TEST(Cost, BoundedAndDurationTerm) {
  ProblemSettings ps;
  ps.lambda_t = 0.01;
  const ControlProblem p = make_ckp_problem(rydberg2(), 2, 1.0, ps);
  const HermiteSpline h = wavy_spline(6, 3.0, 0.7);
  const CostResult c = cost(p, h, 0.2);
  EXPECT_GE(c.j, 0.0);
  EXPECT_LE(c.j, 3.0);
  EXPECT_NEAR(c.j_t, 0.03, 1e-15);
  EXPECT_NEAR(c.total, c.j + c.j_t, 1e-15);
  EXPECT_EQ(c.overlaps.size(), 3u);
  EXPECT_EQ(c.eps.size(), 6u);
}

TEST(Gradient, MatchesCentralDifferences) {
  ProblemSettings ps;
  ps.lambda_t = 1e-3;
  const ControlProblem p = make_ckp_problem(rydberg2(), 2, std::numbers::pi, ps);
  const HermiteSpline h = wavy_spline(8, 3.2, 0.9);
  const double theta = 0.4;
  const GradientResult g = gradient(p, h, theta);
  const RealVector x = h.to_parameters();
  RealVector fd(x.size());
  const double e = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    RealVector xp = x, xm = x;
    xp[i] += e;
    xm[i] -= e;
    HermiteSpline hp = h, hm = h;
    hp.set_parameters(xp);
    hm.set_parameters(xm);
    fd[i] = (cost(p, hp, theta).total - cost(p, hm, theta).total) / (2 * e);
  }
  EXPECT_LE((g.dh - fd).norm(), 1e-5 * fd.norm());
  const double fd_theta = (cost(p, h, theta + e).total - cost(p, h, theta - e).total) / (2 * e);
  EXPECT_NEAR(g.dtheta, fd_theta, 1e-5 * std::abs(fd_theta));
  EXPECT_NEAR(g.cost.total, cost(p, h, theta).total, 1e-14);
}

TEST(Gradient, VanishesAtExactTarget) {
  const HermiteSpline h = wavy_spline(5, 2.0, 0.5);
  const ControlProblem probe = make_ckp_problem(rydberg2(), 2, 0.0);
  // build the target from the problem's own propagator so J = 0 exactly
  const auto segs = spline_to_segments(h);
  ComplexMatrix u = ComplexMatrix::Identity(9, 9);
  const PolynomialEvaluator& ev = probe.evaluator();
  for (const auto& s : segs) {
    RealVector a = RealVector::Zero(static_cast<Eigen::Index>(probe.artifact().basis.size()));
    for (const auto& sl : ev.eval(s.dt, std::span<const double>(s.d.data(), s.d.size()))) a += sl;
    u = (Propagator(probe.artifact().basis, a).matrix() * u).eval();
  }
  const double theta = 0.9;
  u = (rz_product(2, theta, 3) * u).eval();
  const ControlProblem p(rydberg2(), u, symmetric_basis_states(2, 3), rz_generator(2, 3));
  const GradientResult g = gradient(p, h, theta);
  EXPECT_NEAR(g.cost.j, 0.0, 1e-13);
  EXPECT_LE(g.dh.norm(), 1e-10);
  EXPECT_LE(std::abs(g.dtheta), 1e-10);
}

TEST(Gradient, ThetaSlopePointsToOptimum) {
  const Model m = build_model({ModelKind::rydberg, 2});
  const HermiteSpline h = constant_spline(2, 0.5);
  const double theta_star = 1.1;
  const ComplexMatrix target = rz_product(2, theta_star, 3) * expm_taylor(cplx(0, -1.0) * m.a.matrix());
  const ControlProblem p(rydberg2(), target, symmetric_basis_states(2, 3), rz_generator(2, 3));
  EXPECT_LT(gradient(p, h, theta_star - 0.3).dtheta, 0.0);
  EXPECT_GT(gradient(p, h, theta_star + 0.3).dtheta, 0.0);
  EXPECT_NEAR(cost(p, h, theta_star).j, 0.0, 1e-12);
}

TEST(BoxLbfgs, QuadraticBowl) {
  const RealVector center = (RealVector(4) << 1.0, -2.0, 0.5, 3.0).finished();
  const RealVector scale = (RealVector(4) << 1.0, 10.0, 0.1, 3.0).finished();
  auto f = [&](const RealVector& x, RealVector& g) {
    const RealVector r = x - center;
    g = scale.cwiseProduct(r);
    return 0.5 * r.dot(scale.cwiseProduct(r));
  };
  const double inf = std::numeric_limits<double>::infinity();
  BoxLbfgs free(f, RealVector::Zero(4), RealVector::Constant(4, -inf), RealVector::Constant(4, inf));
  for (int i = 0; i < 100 && free.projected_gradient_norm() > 1e-12; ++i) {
    const double before = free.f();
    if (!free.step()) break;
    EXPECT_LE(free.f(), before + 1e-12);
  }
  EXPECT_LE((free.x() - center).norm(), 1e-8);

  RealVector lo = RealVector::Constant(4, -inf), hi = RealVector::Constant(4, inf);
  hi[3] = 2.0;
  lo[1] = -1.0;
  BoxLbfgs boxed(f, RealVector::Zero(4), lo, hi);
  for (int i = 0; i < 100 && boxed.projected_gradient_norm() > 1e-12; ++i) {
    if (!boxed.step()) break;
    EXPECT_TRUE((boxed.x().array() >= lo.array()).all() && (boxed.x().array() <= hi.array()).all());
  }
  const RealVector expect = (RealVector(4) << 1.0, -1.0, 0.5, 2.0).finished();
  EXPECT_LE((boxed.x() - expect).norm(), 1e-8);
}

TEST(Resample, PreservesCostAndMeetsThreshold) {
  ProblemSettings ps;
  const ControlProblem probe = make_ckp_problem(rydberg2(), 2, 1.0, ps);
  const HermiteSpline h = wavy_spline(16, 1.6, 0.6);
  const CostResult before = cost(probe, h, 0.3);
  ASSERT_GT(before.sum_eps, 0.0);
  ASSERT_LT(before.sum_eps, 1e-9);
  ps.eps_star = before.sum_eps / 2;
  const ControlProblem p = make_ckp_problem(rydberg2(), 2, 1.0, ps);
  int events = 0;
  const HermiteSpline r = resample_for_threshold(p, h, &events);
  EXPECT_GE(events, 1);
  EXPECT_GT(r.segments(), h.segments());
  const CostResult after = cost(p, r, 0.3);
  EXPECT_LE(after.sum_eps, 0.1 * ps.eps_star);
  EXPECT_LE(std::abs(after.j - before.j), 1e-9);

  ps.max_segments = 20;
  const ControlProblem capped = make_ckp_problem(rydberg2(), 2, 1.0, ps);
  EXPECT_THROW(resample_for_threshold(capped, h), ResourceError);
}

TEST(Minimize, ControlledZMilestoneAndTraceInvariants) {
  ProblemSettings ps;
  ps.t_min = 4.0;
  ps.t_max = 14.0;
  ps.lambda_t = 1e-3;
  ps.eps_star = 1e-6;
  const ControlProblem p = make_ckp_problem(rydberg2(), 2, std::numbers::pi, ps);
  const HermiteSpline h0 = sample_spline(
      [](double t, int l) {
        const double w = 2 * std::numbers::pi / 3;
        return l == 0 ? 0.1 * std::cos(w * t) : -0.1 * w * std::sin(w * t);
      },
      1, 21, 9.0);
  MinimizeOptions mo;
  mo.max_iter = 400;
  mo.j_target = 1e-3;
  const MinimizeResult res = minimize(p, h0, 0.0, mo);
  EXPECT_EQ(res.status, OptStatus::target_reached);
  EXPECT_LE(res.final_cost.j, 1e-3);
  EXPECT_TRUE(p.feasible(res.spline));
  const auto& rows = res.trace.rows;
  ASSERT_GE(rows.size(), 2u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].iter, rows[i - 1].iter);
    EXPECT_GE(rows[i].segments, rows[i - 1].segments);
    const bool resampled = rows[i].event.find("resample") != std::string::npos;
    if (!resampled) EXPECT_LE(rows[i].j + rows[i].j_t, rows[i - 1].j + rows[i - 1].j_t + 1e-12);
    EXPECT_LE(rows[i].duration, ps.t_max + 1e-9);
    EXPECT_GE(rows[i].duration, ps.t_min - 1e-9);
  }
  std::ostringstream os;
  res.trace.write_csv(os);
  EXPECT_EQ(os.str().rfind("iter,J,J_T,T,S,dim_h,sum_eps,event\n", 0), 0u);
}

TEST(Minimize, StopsWhenBelowTruncationError) {
  // target reachable exactly: the start is already optimal
  const HermiteSpline h = constant_spline(2, 0.5);
  const Model m = build_model({ModelKind::rydberg, 2});
  const ControlProblem p(rydberg2(), expm_taylor(cplx(0, -1.0) * m.a.matrix()), symmetric_basis_states(2, 3),
                         rz_generator(2, 3));
  const MinimizeResult res = minimize(p, h, 0.0);
  EXPECT_EQ(res.status, OptStatus::converged);
  EXPECT_LE(res.final_cost.j, 1e-10);
}

TEST(Sweep, WarmStartsAndPersists) {
  const auto dir = std::filesystem::temp_directory_path() / "magpoly_sweep_test";
  std::filesystem::remove_all(dir);
  SweepOptions so;
  so.stages = {{1e-3, 0.0, 4.0, 14.0, 300, 1e-3}};
  so.out_dir = dir;
  const HermiteSpline h0 = wavy_spline(21, 9.0, 0.1);
  const auto res = sweep_ckp(rydberg2(), 2, {0.9 * std::numbers::pi, std::numbers::pi}, h0, 0.0, so);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_LT(res[0].phi, res[1].phi);
  for (const auto& r : res) EXPECT_TRUE(r.error.empty()) << r.error;
  // reaching the stage milestone counts as good, so the next phi starts from that pulse
  ASSERT_TRUE(res[0].ok);
  EXPECT_NEAR(res[1].result.trace.rows.front().duration, res[0].result.spline.duration(), 1e-12);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 4u);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(sweep_ckp(rydberg2(), 2, {1.0, 0.5}, h0, 0.0, so), ValidationError);
}
