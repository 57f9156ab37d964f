#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace magpoly::cli {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ValidationError("unknown config key '" + section + "." + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::vector<double> read_grid(const json& v) {
  if (v.is_array()) return v.get<std::vector<double>>();
  check_keys(v, "simulate.t_grid", {"lo", "hi", "count"});
  const double lo = v.value("lo", 3e-2), hi = v.value("hi", 1.0);
  const int count = v.value("count", 20);
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ValidationError("invalid t_grid range");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return out;
}

}  // namespace

ModelSpec RunConfig::model_spec() const { return {parse_model_kind(model.name), model.n}; }

void RunConfig::validate() const {
  const ModelSpec spec = model_spec();
  if (spec.n < 1 || spec.n > 10) throw ValidationError("model.n must be in [1, 10]");
  if (expansion.k_M < 1 || expansion.k_M > 13) throw ValidationError("expansion.k_M must be in [1, 13]");
  if (expansion.Gamma < expansion.k_M || expansion.Gamma > 255)
    throw ValidationError("expansion.Gamma must be in [k_M, 255]");
  if (expansion.m < 0 || expansion.m > 255) throw ValidationError("expansion.m must be in [0, 255]");
  if (!(expansion.eps_L > 0.0) || expansion.eps_L >= 1.0)
    throw ValidationError("expansion.eps_L must be in (0, 1)");
  for (double t : simulate.t_grid)
    if (!(t > 0.0)) throw ValidationError("simulate.t_grid values must be positive");
  if (simulate.samples < 1) throw ValidationError("simulate.samples must be positive");
  for (int k : simulate.k_list)
    if (k < 1 || k > expansion.k_M) throw ValidationError("simulate.k_list entries must be in [1, k_M]");
  if (!(simulate.fit_lo > 0.0) || !(simulate.fit_hi > simulate.fit_lo))
    throw ValidationError("simulate fit window must satisfy 0 < fit_lo < fit_hi");
  if (static_cast<int>(simulate.controls.size()) > expansion.m + 1)
    throw ValidationError("simulate.controls has more than m + 1 entries");
  if (io.artifact_path.empty()) throw ValidationError("io.artifact_path is empty");
}

void RunConfig::validate_optimize() const {
  const ModelSpec spec = model_spec();
  const auto& o = optimize;
  if (o.L < 0 || 2 * o.L + 1 > expansion.m)
    throw ValidationError("optimize.L needs 2L + 1 <= expansion.m");
  if (o.S_init < 1) throw ValidationError("optimize.S_init must be positive");
  if (!(o.T_min >= 0.0) || !(o.T_max > o.T_min)) throw ValidationError("need 0 <= T_min < T_max");
  if (!(o.T_init >= o.T_min && o.T_init <= o.T_max)) throw ValidationError("optimize.T_init outside [T_min, T_max]");
  if (o.lambda_T < 0.0) throw ValidationError("optimize.lambda_T must be non-negative");
  if (!(o.eps_star > 0.0)) throw ValidationError("optimize.eps_star must be positive");
  if (o.max_iter < 0) throw ValidationError("optimize.max_iter must be non-negative");
  if (o.theta_starts < 1) throw ValidationError("optimize.theta_starts must be positive");
  if (!(o.period > 0.0)) throw ValidationError("optimize.period must be positive");
  if (o.target.kind != "ckp" && o.target.kind != "identity" && o.target.kind != "self")
    throw ValidationError("optimize.target.kind must be ckp, identity or self");
  if (o.target.kind != "self" && spec.kind != ModelKind::rydberg)
    throw ValidationError("gate targets need the rydberg model");
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ValidationError("malformed override path '" + path + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  if (doc.is_null()) return c;
  check_keys(doc, "<root>", {"model", "expansion", "simulate", "optimize", "io"});
  if (doc.contains("model")) {
    const auto& s = doc["model"];
    check_keys(s, "model", {"name", "n"});
    read(s, "name", c.model.name);
    read(s, "n", c.model.n);
  }
  if (doc.contains("expansion")) {
    const auto& s = doc["expansion"];
    check_keys(s, "expansion", {"k_M", "Gamma", "m", "eps_L"});
    read(s, "k_M", c.expansion.k_M);
    read(s, "Gamma", c.expansion.Gamma);
    read(s, "m", c.expansion.m);
    read(s, "eps_L", c.expansion.eps_L);
  }
  if (doc.contains("simulate")) {
    const auto& s = doc["simulate"];
    check_keys(s, "simulate", {"t_grid", "samples", "seed", "k_list", "fit_lo", "fit_hi", "controls"});
    if (s.contains("t_grid")) c.simulate.t_grid = read_grid(s["t_grid"]);
    read(s, "samples", c.simulate.samples);
    read(s, "seed", c.simulate.seed);
    read(s, "k_list", c.simulate.k_list);
    read(s, "fit_lo", c.simulate.fit_lo);
    read(s, "fit_hi", c.simulate.fit_hi);
    read(s, "controls", c.simulate.controls);
  }
  if (doc.contains("optimize")) {
    const auto& s = doc["optimize"];
    check_keys(s, "optimize", {"L", "S_init", "T_init", "T_min", "T_max", "lambda_T", "eps_star", "max_iter",
                               "j_target", "theta0", "theta_starts", "amp", "period", "target"});
    auto& o = c.optimize;
    read(s, "L", o.L);
    read(s, "S_init", o.S_init);
    read(s, "T_init", o.T_init);
    read(s, "T_min", o.T_min);
    read(s, "T_max", o.T_max);
    read(s, "lambda_T", o.lambda_T);
    read(s, "eps_star", o.eps_star);
    read(s, "max_iter", o.max_iter);
    read(s, "j_target", o.j_target);
    read(s, "theta0", o.theta0);
    read(s, "theta_starts", o.theta_starts);
    read(s, "amp", o.amp);
    read(s, "period", o.period);
    if (s.contains("target")) {
      check_keys(s["target"], "optimize.target", {"kind", "phi"});
      read(s["target"], "kind", o.target.kind);
      read(s["target"], "phi", o.target.phi);
    }
  }
  if (doc.contains("io")) {
    const auto& s = doc["io"];
    check_keys(s, "io", {"artifact_path", "out_dir"});
    read(s, "artifact_path", c.io.artifact_path);
    read(s, "out_dir", c.io.out_dir);
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  const auto& o = c.optimize;
  return {
      {"model", {{"name", c.model.name}, {"n", c.model.n}}},
      {"expansion",
       {{"k_M", c.expansion.k_M}, {"Gamma", c.expansion.Gamma}, {"m", c.expansion.m}, {"eps_L", c.expansion.eps_L}}},
      {"simulate",
       {{"t_grid", c.simulate.t_grid},
        {"samples", c.simulate.samples},
        {"seed", c.simulate.seed},
        {"k_list", c.simulate.k_list},
        {"fit_lo", c.simulate.fit_lo},
        {"fit_hi", c.simulate.fit_hi},
        {"controls", c.simulate.controls}}},
      {"optimize",
       {{"L", o.L},
        {"S_init", o.S_init},
        {"T_init", o.T_init},
        {"T_min", o.T_min},
        {"T_max", o.T_max},
        {"lambda_T", o.lambda_T},
        {"eps_star", o.eps_star},
        {"max_iter", o.max_iter},
        {"j_target", o.j_target},
        {"theta0", o.theta0},
        {"theta_starts", o.theta_starts},
        {"amp", o.amp},
        {"period", o.period},
        {"target", {{"kind", o.target.kind}, {"phi", o.target.phi}}}}},
      {"io", {{"artifact_path", c.io.artifact_path}, {"out_dir", c.io.out_dir}}},
  };
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open config " + path.string());
    doc = json::parse(is, nullptr, false, true);
    if (doc.is_discarded()) throw ValidationError("config " + path.string() + " is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig cfg = config_from_json(doc);
  cfg.validate();
  return cfg;
}

}  // namespace magpoly::cli
