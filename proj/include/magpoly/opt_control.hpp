#pragma once

#include <complex>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "magpoly/artifact.hpp"
#include "magpoly/magnus_eval.hpp"
#include "magpoly/magnus_grad.hpp"
#include "magpoly/spline.hpp"

namespace magpoly {

struct ProblemSettings {
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
  double lambda_t = 0.0;
  double eps_star = 1e-6;
  int k_d = -1;  // adjoint series order, -1 means k_M
  int max_segments = 512;
  Execution exec = Execution::parallel;
};

/// State-to-state gate problem J = 1/2 sum_r (1 - Re <phi_r| U |psi_r>) + lambda_T T
/// with U = exp(-i theta G) prod_s exp(-i M(c_s)) and G diagonal.
class ControlProblem {
 public:
  ControlProblem(std::shared_ptr<const Artifact> artifact, const ComplexMatrix& target,
                 std::vector<ComplexVector> states, RealVector rz_generator,
                 ProblemSettings settings = {});

  const Artifact& artifact() const noexcept { return *artifact_; }
  const ProblemSettings& settings() const noexcept { return settings_; }
  ProblemSettings& settings() noexcept { return settings_; }
  const std::vector<ComplexVector>& initial_states() const noexcept { return psi_; }
  const std::vector<ComplexVector>& target_states() const noexcept { return phi_; }
  const RealVector& rz_generator() const noexcept { return rz_; }
  const PolynomialEvaluator& evaluator() const noexcept { return eval_; }
  const GradientEvaluator& gradient_evaluator() const noexcept { return grad_; }
  const RealVector& l1_norms() const noexcept { return l1_; }
  int k_d() const noexcept;
  /// Spline Hermite order allowed by the artifact's control degree.
  int max_hermite_order() const noexcept { return (artifact_->tensor.params.m - 1) / 2; }

  /// Per-parameter box for a spline with S segments (plus theta, unbounded).
  void bounds(const HermiteSpline& h, RealVector& lo, RealVector& hi) const;
  bool feasible(const HermiteSpline& h, double slack = 1e-12) const;

 private:
  std::shared_ptr<const Artifact> artifact_;
  std::vector<ComplexVector> psi_, phi_;
  RealVector rz_;
  RealVector l1_;
  ProblemSettings settings_;
  PolynomialEvaluator eval_;
  GradientEvaluator grad_;
};

/// C_kP(phi) on the n-atom blockade model with the n + 1 symmetric trajectories.
ControlProblem make_ckp_problem(std::shared_ptr<const Artifact> artifact, int n, double phi,
                                ProblemSettings settings = {});

/// Full propagator prod_s exp(-i M(c_s)) of a pulse (no R_Z factor).
ComplexMatrix pulse_evolution(const Artifact& artifact, const HermiteSpline& h);

struct CostResult {
  double j = 0.0;    // gate infidelity term
  double j_t = 0.0;  // lambda_T T
  double total = 0.0;
  double duration = 0.0;
  double sum_eps = 0.0;
  std::vector<double> eps;       // eps_M per segment
  std::vector<cplx> overlaps;    // <phi_r| U |psi_r>
};

CostResult cost(const ControlProblem& problem, const HermiteSpline& h, double theta);

struct GradientResult {
  CostResult cost;
  RealVector dh;  // d(J + J_T) / dh in HermiteSpline parameter layout
  double dtheta = 0.0;
};

GradientResult gradient(const ControlProblem& problem, const HermiteSpline& h, double theta);

/// Objective for the box minimizer: returns f and writes the gradient.
using Objective = std::function<double(const RealVector& x, RealVector& grad)>;

struct LbfgsOptions {
  int memory = 10;
  double armijo = 1e-4;  // sufficient decrease
  double wolfe = 0.9;    // curvature condition
  int max_line_evals = 30;
  int max_backtracks = 50;  // fallback projected backtracking
};

/// Limited-memory BFGS on a box. Variables sitting on a bound with the
/// gradient pointing outward are frozen for the step. The line search looks
/// for a strong Wolfe point on the feasible part of the search ray and treats
/// the box edge as an acceptable end point; if that fails, a monotone Armijo
/// backtrack along the projected path is tried.
class BoxLbfgs {
 public:
  BoxLbfgs(Objective f, RealVector x0, RealVector lo, RealVector hi, LbfgsOptions opts = {});

  /// One quasi-Newton iteration. Returns false if no descent step was found
  /// even along the steepest-descent direction.
  bool step();
  const RealVector& x() const noexcept { return x_; }
  double f() const noexcept { return f_; }
  const RealVector& grad() const noexcept { return g_; }
  double projected_gradient_norm() const;
  int evaluations() const noexcept { return evals_; }

 private:
  RealVector direction(const std::vector<bool>& active) const;
  std::vector<bool> active_set() const;
  double eval(const RealVector& x, RealVector& g);
  bool wolfe_search(const RealVector& p);
  bool projected_backtrack(const RealVector& p);
  void accept(const RealVector& xn, double fn, const RealVector& gn);

  Objective fn_;
  RealVector x_, lo_, hi_, g_;
  double f_ = 0.0;
  LbfgsOptions opts_;
  std::vector<RealVector> s_, y_;
  int evals_ = 0;
};

struct TraceRow {
  int iter = 0;
  double j = 0.0, j_t = 0.0, duration = 0.0;
  int segments = 0;
  std::size_t dim_h = 0;
  double sum_eps = 0.0;
  std::string event;
};

struct OptimizerTrace {
  std::vector<TraceRow> rows;
  void write_csv(std::ostream& os) const;
};

enum class OptStatus { converged, target_reached, max_iter, plateau, line_search_failed };
std::string to_string(OptStatus s);

struct MinimizeOptions {
  int max_iter = 1000;
  /// Stop as soon as J <= j_target (0 disables). Used for milestone runs.
  double j_target = 0.0;
  int stall_window = 50;
  double stall_rel = 1e-10;
  LbfgsOptions lbfgs;
  /// Called after every trace row; returning false aborts with max_iter status.
  std::function<bool(const TraceRow&)> on_row;
};

struct MinimizeResult {
  HermiteSpline spline;
  double theta = 0.0;
  OptimizerTrace trace;
  OptStatus status = OptStatus::max_iter;
  CostResult final_cost;
  int iterations = 0;
  int resamples = 0;
};

/// Refines the spline until sum eps_M <= 0.1 eps_*: grows S by 50% (rounded up)
/// and falls back to uniform halving when the split would leave the box.
/// Throws ResourceError past the segment cap.
HermiteSpline resample_for_threshold(const ControlProblem& problem, const HermiteSpline& h,
                                     int* events = nullptr);

MinimizeResult minimize(const ControlProblem& problem, HermiteSpline h, double theta,
                        const MinimizeOptions& opts = {});

struct ThetaStart {
  double theta0 = 0.0;
  double j = 0.0;
  OptStatus status = OptStatus::max_iter;
  int iterations = 0;
};

struct MultiStartResult {
  MinimizeResult best;
  int best_index = 0;
  std::vector<ThetaStart> starts;
};

/// Runs minimize from theta0 + 4 pi j / count, j = 0..count-1 (R_Z has period
/// 4 pi), stopping at the first start that converges or reaches j_target;
/// otherwise keeps the lowest J.
MultiStartResult minimize_theta_starts(const ControlProblem& problem, const HermiteSpline& h,
                                       double theta0, int count, const MinimizeOptions& opts = {});

struct SweepStage {
  double eps_star = 1e-4;
  double lambda_t = 0.0;
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
  int max_iter = 1000;
  double j_target = 0.0;
};

struct SweepStageResult {
  double phi = 0.0;
  int stage = 0;
  bool ok = false;  // final J <= eps_* of the stage, or the stage's j_target was reached
  std::string error;
  MinimizeResult result;
};

struct SweepOptions {
  std::vector<SweepStage> stages;
  ProblemSettings base;
  MinimizeOptions minimize;
  std::filesystem::path out_dir;  // pulses and traces written here when non-empty
};

/// Warm-started sweep over phi_grid. Each phi runs the stages in order,
/// starting from the last good pulse; failed stages are recorded and skipped.
std::vector<SweepStageResult> sweep_ckp(std::shared_ptr<const Artifact> artifact, int n,
                                        const std::vector<double>& phi_grid,
                                        const HermiteSpline& initial, double theta0,
                                        const SweepOptions& opts);

}  // namespace magpoly
