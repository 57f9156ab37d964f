#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "magpoly/artifact.hpp"
#include "magpoly/magnus_eval.hpp"
#include "magpoly/models.hpp"
#include "magpoly/opt_control.hpp"
#include "magpoly/spline.hpp"
#include "magpoly/verify.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace magpoly;
using magpoly::cli::RunConfig;

namespace {

// Sub-seed streams split from simulate.seed.
constexpr std::uint64_t kStreamState = 11, kStreamControls = 12;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExpansionParams params_of(const RunConfig& c) {
  return {c.expansion.k_M, c.expansion.Gamma, c.expansion.m};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw FormatError("cannot write " + path.string());
  return os;
}

void write_json(const fs::path& path, const json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  if (!os) throw FormatError("write failed for " + path.string());
}

std::string digest_of(const Artifact& art) { return to_hex(art.tensor.model_digest); }

void print_summary(const Artifact& art, std::ostream& os) {
  const auto& p = art.tensor.params;
  os << "k_M " << p.k_max << "\nGamma " << p.gamma_max << "\nm " << p.m << "\ndim_H " << art.a.rows()
     << "\ndim_g " << art.basis.size() << "\nentries " << art.tensor.entries.size() << "\neps_L " << art.eps_l
     << "\ndigest " << digest_of(art) << '\n';
}

/// Loads the artifact and checks that it was built from the configured model.
std::shared_ptr<Artifact> load_matching(const RunConfig& c) {
  auto art = std::make_shared<Artifact>(load_artifact(c.io.artifact_path));
  const Model model = build_model(c.model_spec());
  const auto want = model_digest(model.a.matrix(), model.b.matrix(), art->eps_l, art->tensor.params);
  if (want != art->tensor.model_digest)
    throw ValidationError("artifact " + c.io.artifact_path + " was built for a different model");
  return art;
}

// Relative error of the compiled M against nested quadrature, up to third order.
// The control degree is capped so that no monomial is cut by Gamma.
double self_check(const Artifact& art, std::uint64_t seed) {
  const auto& p = art.tensor.params;
  const int k = std::min(p.k_max, 3);
  const int deg = std::min(p.m, (p.gamma_max - k) / k);
  const Artifact low = k < p.k_max ? truncate_order(art, k) : art;
  std::mt19937_64 rng(derive_seed(seed, 99, 0));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double t = 0.4 * std::abs(u(rng)) + 1e-3;
    std::vector<double> d(deg + 1);
    for (double& x : d) x = u(rng);
    const ComplexMatrix ours = assemble(low.basis, eval_coeffs(low.tensor, t, d)).op;
    const ComplexMatrix ref = quadrature_oracle(art.a, art.b, d, t, k);
    worst = std::max(worst, (ours - ref).norm() / ref.norm());
  }
  return worst;
}

int cmd_gen_coeffs(const RunConfig& c, bool check) {
  const auto t0 = std::chrono::steady_clock::now();
  const Model model = build_model(c.model_spec());
  const Artifact art = build_artifact(model.a, model.b, params_of(c), c.expansion.eps_L);
  const double wall = seconds_since(t0);
  const fs::path path(c.io.artifact_path);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  save_artifact(art, path);
  print_summary(art, std::cout);
  std::cout << "wall_s " << wall << "\nwritten " << path.string() << '\n';
  if (check) {
    const double err = self_check(art, c.simulate.seed);
    std::cout << "self_check_rel_err " << err << '\n';
    if (!(err <= 1e-7)) throw NumericError("self-check against quadrature failed");
  }
  return 0;
}

int cmd_info(const std::string& path, bool dump) {
  const Artifact art = load_artifact(path);
  print_summary(art, std::cout);
  if (dump) write_text_dump(art, std::cout, true);
  return 0;
}

std::vector<double> t_grid_of(const RunConfig& c) {
  return c.simulate.t_grid.empty() ? log_grid(3e-2, 1.0, 20) : c.simulate.t_grid;
}

std::vector<int> k_list_of(const RunConfig& c) {
  return c.simulate.k_list.empty() ? std::vector<int>{c.expansion.k_M} : c.simulate.k_list;
}

int cmd_simulate(const RunConfig& c) {
  const auto art = load_matching(c);
  const int m = art->tensor.params.m;
  std::vector<double> d = c.simulate.controls;
  if (d.empty()) {
    std::mt19937_64 rng(derive_seed(c.simulate.seed, kStreamControls, 0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    d.resize(m + 1);
    for (double& x : d) x = u(rng);
  }
  if (static_cast<int>(d.size()) > m + 1) throw ValidationError("more controls than the artifact degree allows");
  const ComplexVector psi0 = haar_state(art->a.rows(), derive_seed(c.simulate.seed, kStreamState, 0));
  const PolynomialEvaluator eval(art->tensor);
  const auto ks = k_list_of(c);
  for (int k : ks)
    if (k > eval.k_max()) throw ValidationError("simulate.k_list exceeds the artifact order");

  ensure_dir(c.io.out_dir);
  auto os = open_out(fs::path(c.io.out_dir) / "simulate.csv");
  os << "t,k,error,bound,ode_steps\n" << std::setprecision(12);
  for (double t : t_grid_of(c)) {
    const auto slices = eval.eval(t, d);
    const OdeResult ref = ode_reference(art->a, art->b, d, t, psi0);
    const double bound = check_convergence(art->a, art->b, t, d).bound;
    for (int k : ks) {
      std::vector<RealVector> first(slices.begin(), slices.begin() + k);
      const ComplexVector psi = propagate(assemble(art->basis, std::move(first), t), psi0);
      os << t << ',' << k << ',' << (psi - ref.psi).norm() << ',' << bound << ',' << ref.steps << '\n';
    }
  }
  if (!os) throw FormatError("write failed for simulate.csv");
  std::cout << "wrote " << (fs::path(c.io.out_dir) / "simulate.csv").string() << '\n';
  return 0;
}

int cmd_error_scan(const RunConfig& c) {
  const auto art = load_matching(c);
  ScanOptions opts;
  opts.t_grid = t_grid_of(c);
  opts.samples = c.simulate.samples;
  opts.seed = c.simulate.seed;
  opts.fit_lo = c.simulate.fit_lo;
  opts.fit_hi = c.simulate.fit_hi;
  ensure_dir(c.io.out_dir);
  json summary = json::array();
  for (int k : k_list_of(c)) {
    const ScanResult r = error_scan(*art, k, opts);
    const fs::path csv = fs::path(c.io.out_dir) / ("scan_k" + std::to_string(k) + ".csv");
    auto os = open_out(csv);
    write_scan_csv(r, os);
    if (!os) throw FormatError("write failed for " + csv.string());
    summary.push_back({{"k_M", k},
                       {"k_app", r.fit.exponent},
                       {"log10_prefactor", r.fit.intercept},
                       {"fit_points", r.fit.points},
                       {"fit_t_lo", r.fit.t_lo},
                       {"fit_t_hi", r.fit.t_hi},
                       {"convergence_warnings", r.convergence_warnings}});
    std::cout << "k_M " << k << " k_app " << r.fit.exponent << " points " << r.fit.points << '\n';
  }
  write_json(fs::path(c.io.out_dir) / "scan_summary.json", {{"scans", summary}});
  return 0;
}

ControlProblem make_problem(const RunConfig& c, std::shared_ptr<const Artifact> art, const HermiteSpline& start) {
  const auto& o = c.optimize;
  ProblemSettings ps;
  ps.t_min = o.T_min;
  ps.t_max = o.T_max;
  ps.lambda_t = o.lambda_T;
  ps.eps_star = o.eps_star;
  const ModelSpec spec = c.model_spec();
  const int ld = spec.local_dim();
  if (o.target.kind == "ckp") return make_ckp_problem(art, spec.n, o.target.phi, ps);
  if (o.target.kind == "identity") {
    const Eigen::Index dim = art->a.rows();
    return ControlProblem(art, ComplexMatrix::Identity(dim, dim), symmetric_basis_states(spec.n, ld),
                          rz_generator(spec.n, ld), ps);
  }
  // "self": the target is what the starting pulse already does, so J starts at zero.
  const Eigen::Index dim = art->a.rows();
  std::vector<ComplexVector> states;
  if (spec.kind == ModelKind::rydberg) {
    states = symmetric_basis_states(spec.n, ld);
  } else {
    for (Eigen::Index i = 0; i < dim; ++i) states.push_back(ComplexVector::Unit(dim, i));
  }
  return ControlProblem(art, pulse_evolution(*art, start), std::move(states), RealVector::Zero(dim), ps);
}

/// Last iteration index in an existing trace, or -1.
int last_trace_iter(const fs::path& path) {
  std::ifstream is(path);
  if (!is) return -1;
  std::string line, last;
  std::getline(is, line);
  while (std::getline(is, line))
    if (!line.empty()) last = line;
  if (last.empty()) return -1;
  try {
    return std::stoi(last.substr(0, last.find(',')));
  } catch (const std::exception&) {
    throw FormatError("cannot parse trace " + path.string());
  }
}

int cmd_optimize(const RunConfig& c, const std::string& resume) {
  c.validate_optimize();
  const auto& o = c.optimize;
  const auto art = load_matching(c);
  HermiteSpline h;
  double theta = o.theta0;
  if (!resume.empty()) {
    std::ifstream is(resume);
    if (!is) throw FormatError("cannot open pulse " + resume);
    auto [spline, th] = read_spline(is);
    h = std::move(spline);
    if (th) theta = *th;
  } else {
    const double w = 2.0 * std::numbers::pi / o.period, amp = o.amp;
    h = sample_spline(
        [&](double t, int l) {
          // l-th derivative of amp cos(w t)
          const double phase = w * t + 0.5 * std::numbers::pi * l;
          return amp * std::pow(w, l) * std::cos(phase);
        },
        o.L, o.S_init, o.T_init);
  }
  const ControlProblem problem = make_problem(c, art, h);

  MinimizeOptions mo;
  mo.max_iter = o.max_iter;
  mo.j_target = o.j_target;
  const auto t0 = std::chrono::steady_clock::now();
  const MultiStartResult ms = minimize_theta_starts(problem, h, theta, o.theta_starts, mo);
  const double wall = seconds_since(t0);
  const MinimizeResult& r = ms.best;

  ensure_dir(c.io.out_dir);
  const fs::path dir(c.io.out_dir);
  {
    auto os = open_out(dir / "pulse.spline");
    write_spline(r.spline, os, r.theta);
    if (!os) throw FormatError("write failed for pulse.spline");
  }
  const fs::path trace_path = dir / "trace.csv";
  const int offset = resume.empty() ? 0 : last_trace_iter(trace_path) + 1;
  if (offset > 0) {
    std::ostringstream buf;
    OptimizerTrace shifted = r.trace;
    for (auto& row : shifted.rows) row.iter += offset;
    shifted.write_csv(buf);
    const std::string text = buf.str();
    auto os = open_out(trace_path, std::ios::app);
    os << text.substr(text.find('\n') + 1);
  } else {
    auto os = open_out(trace_path);
    r.trace.write_csv(os);
  }

  json starts = json::array();
  for (const auto& s : ms.starts)
    starts.push_back({{"theta0", s.theta0}, {"J", s.j}, {"status", to_string(s.status)}, {"iterations", s.iterations}});
  const auto& fc = r.final_cost;
  write_json(dir / "result.json", {{"J", fc.j},
                                   {"J_T", fc.j_t},
                                   {"total", fc.total},
                                   {"T", fc.duration},
                                   {"S", r.spline.segments()},
                                   {"theta", r.theta},
                                   {"sum_eps", fc.sum_eps},
                                   {"status", to_string(r.status)},
                                   {"iterations", r.iterations},
                                   {"resamples", r.resamples},
                                   {"iteration_offset", offset},
                                   {"theta_starts", starts},
                                   {"config", cli::config_to_json(c)}});
  std::cout << std::setprecision(6) << "status " << to_string(r.status) << "\nJ " << fc.j << "\nT " << fc.duration
            << "\nS " << r.spline.segments() << "\niterations " << r.iterations << "\nwall_s " << wall << '\n';
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::config: return 1;
    case Error::Kind::numeric: return 2;
    case Error::Kind::io: return 3;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compiled Magnus expansion: coefficient generation, simulation and pulse optimization"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--set", overrides, "override, e.g. expansion.k_M=6 (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--threads", threads, "cap on worker threads")->check(CLI::NonNegativeNumber);

  bool check = false;
  auto* gen = app.add_subcommand("gen-coeffs", "build the Lie basis and coefficient tensors, write the artifact");
  gen->add_flag("--self-check", check, "compare against nested quadrature up to third order");
  auto* sim = app.add_subcommand("simulate", "ME vs ODE state error at the configured times");
  auto* scan = app.add_subcommand("error-scan", "randomized error scan and power-law fit per k_M");
  std::string resume;
  auto* opt = app.add_subcommand("optimize", "optimize a spline pulse for the configured target");
  opt->add_option("--resume", resume, "continue from a pulse file; appends to trace.csv");
  std::string info_path;
  bool dump = false;
  auto* info = app.add_subcommand("info", "print an artifact header summary");
  info->add_option("artifact", info_path, "artifact file (default: io.artifact_path)");
  info->add_flag("--dump", dump, "also print every tensor entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);
    const RunConfig cfg = cli::load_config(config_path, overrides);
    if (gen->parsed()) return cmd_gen_coeffs(cfg, check);
    if (info->parsed()) return cmd_info(info_path.empty() ? cfg.io.artifact_path : info_path, dump);
    if (sim->parsed()) return cmd_simulate(cfg);
    if (scan->parsed()) return cmd_error_scan(cfg);
    if (opt->parsed()) return cmd_optimize(cfg, resume);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 2;
  }
  return 0;
}
