#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "magpoly/models.hpp"

namespace magpoly::cli {

struct RunConfig {
  struct Model {
    std::string name = "sparse";
    int n = 2;
  } model;
  struct Expansion {
    int k_M = 4;
    int Gamma = 6;
    int m = 2;
    double eps_L = 1e-5;
  } expansion;
  struct Simulate {
    std::vector<double> t_grid;  // empty: log grid over [3e-2, 1] with 20 points
    int samples = 20;
    std::uint64_t seed = 1;
    std::vector<int> k_list;     // empty: just k_M
    double fit_lo = 1e-14, fit_hi = 1e-2;
    std::vector<double> controls;  // simulate: fixed d_gamma; empty draws from the seed
  } simulate;
  struct Target {
    std::string kind = "ckp";  // ckp | identity | self
    double phi = std::numbers::pi;
  };
  struct Optimize {
    int L = 1;
    int S_init = 21;
    double T_init = 9.0;
    double T_min = 4.0, T_max = 18.0;
    double lambda_T = 1e-3;
    double eps_star = 1e-6;
    int max_iter = 1000;
    double j_target = 0.0;
    double theta0 = 0.0;
    int theta_starts = 1;
    double amp = 0.1, period = 3.0;  // initial pulse amp * cos(2 pi t / period)
    Target target;
  } optimize;
  struct Io {
    std::string artifact_path = "artifact.bin";
    std::string out_dir = "out";
  } io;

  ModelSpec model_spec() const;
  /// Range checks run before any computation; throws ValidationError.
  void validate() const;
  /// Extra checks for the optimize command (spline degree vs m, bounds, target).
  void validate_optimize() const;
};

/// Applies "section.key=value" (value parsed as JSON when possible, else as a
/// string) to a JSON document.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Strict conversion: unknown sections or keys are ValidationErrors.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Reads the file (empty path: defaults), applies overrides, validates.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

}  // namespace magpoly::cli
