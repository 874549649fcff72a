// Run configuration for the command-line tool: JSON ingestion with strict
// key checking, flag overrides, per-command defaults and the manifest that
// records the fully resolved result.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gmmssl::cli {

inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

struct ParamsSection {
  std::optional<double> sigma;
  std::optional<int> d;
  int n = 10;
  int m = 1000;
  int tau = 20;
  std::optional<double> w;  // unset means n / (n + m)
};

struct BoundSection {
  std::string method = "theorem2";
  int t_max = 6;
  double delta = 0.05;
  double epsilon = 0.0;
  std::optional<double> r;
  std::optional<double> c;
  std::optional<double> c1;
  std::optional<double> c2;
  double tol = 1e-7;
  std::string expectation = "quad2d";
  std::int64_t samples = 100'000;
  std::string g_route = "projected";
};

struct TrialSection {
  std::string mode = "fresh";
  int trials = 2000;
  std::string population_risk = "analytic";
  int test_size = 10'000;
};

struct SweepSection {
  std::optional<std::vector<double>> sigma;
  std::optional<std::vector<int>> n;
  std::optional<std::vector<int>> m;
  std::optional<std::vector<int>> t;
};

/// Evaluation grid for fsigma (x) and gsigma (alpha).
struct GridSection {
  double x_min = -1.0;
  double x_max = 1.0;
  int points = 101;
  std::vector<int> t = {1, 2};
  std::optional<std::vector<double>> sigma;
};

struct RunConfig {
  std::uint64_t seed = 1;
  ParamsSection params;
  BoundSection bound;
  TrialSection trial;
  SweepSection sweep;
  GridSection grid;
};

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + where + "." + key + "' has the wrong type");
  }
}

template <class T>
void read(const Json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(obj, key, v, where);
  out = v;
}

template <class T>
void put(Json& obj, const char* key, const std::optional<T>& v) {
  if (v) obj[key] = *v; else obj[key] = nullptr;
}

}  // namespace detail

/// Applies a config document (or a manifest wrapping one) on top of cfg.
inline void apply_json(const Json& doc, RunConfig& cfg) {
  using detail::read;
  const Json* root = &doc;
  if (doc.is_object() && doc.contains("command") && doc.contains("config")) {
    detail::check_keys(doc, {"command", "tool_version", "seed", "duration_seconds", "config"},
                       "manifest");
    root = &doc.at("config");
  }
  detail::check_keys(*root, {"seed", "params", "bound", "trial", "sweep", "grid"}, "config");
  read(*root, "seed", cfg.seed, "config");
  if (root->contains("params")) {
    const Json& p = root->at("params");
    detail::check_keys(p, {"sigma", "d", "n", "m", "tau", "w"}, "params");
    read(p, "sigma", cfg.params.sigma, "params");
    read(p, "d", cfg.params.d, "params");
    read(p, "n", cfg.params.n, "params");
    read(p, "m", cfg.params.m, "params");
    read(p, "tau", cfg.params.tau, "params");
    if (p.contains("w")) {
      const Json& w = p.at("w");
      if (w.is_string() && w.get<std::string>() == "auto") {
        cfg.params.w.reset();
      } else {
        read(p, "w", cfg.params.w, "params");
      }
    }
  }
  if (root->contains("bound")) {
    const Json& b = root->at("bound");
    detail::check_keys(b, {"method", "t_max", "delta", "epsilon", "r", "c", "c1", "c2", "tol",
                           "expectation", "samples", "g_route"},
                       "bound");
    read(b, "method", cfg.bound.method, "bound");
    read(b, "t_max", cfg.bound.t_max, "bound");
    read(b, "delta", cfg.bound.delta, "bound");
    read(b, "epsilon", cfg.bound.epsilon, "bound");
    read(b, "r", cfg.bound.r, "bound");
    read(b, "c", cfg.bound.c, "bound");
    read(b, "c1", cfg.bound.c1, "bound");
    read(b, "c2", cfg.bound.c2, "bound");
    read(b, "tol", cfg.bound.tol, "bound");
    read(b, "expectation", cfg.bound.expectation, "bound");
    read(b, "samples", cfg.bound.samples, "bound");
    read(b, "g_route", cfg.bound.g_route, "bound");
  }
  if (root->contains("trial")) {
    const Json& t = root->at("trial");
    detail::check_keys(t, {"mode", "trials", "population_risk", "test_size"}, "trial");
    read(t, "mode", cfg.trial.mode, "trial");
    read(t, "trials", cfg.trial.trials, "trial");
    read(t, "population_risk", cfg.trial.population_risk, "trial");
    read(t, "test_size", cfg.trial.test_size, "trial");
  }
  if (root->contains("sweep")) {
    const Json& s = root->at("sweep");
    detail::check_keys(s, {"sigma", "n", "m", "t"}, "sweep");
    read(s, "sigma", cfg.sweep.sigma, "sweep");
    read(s, "n", cfg.sweep.n, "sweep");
    read(s, "m", cfg.sweep.m, "sweep");
    read(s, "t", cfg.sweep.t, "sweep");
  }
  if (root->contains("grid")) {
    const Json& g = root->at("grid");
    detail::check_keys(g, {"x_min", "x_max", "points", "t", "sigma"}, "grid");
    read(g, "x_min", cfg.grid.x_min, "grid");
    read(g, "x_max", cfg.grid.x_max, "grid");
    read(g, "points", cfg.grid.points, "grid");
    read(g, "t", cfg.grid.t, "grid");
    read(g, "sigma", cfg.grid.sigma, "grid");
  }
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

inline Json to_json(const RunConfig& cfg) {
  using detail::put;
  Json j;
  j["seed"] = cfg.seed;
  Json p;
  put(p, "sigma", cfg.params.sigma);
  put(p, "d", cfg.params.d);
  p["n"] = cfg.params.n;
  p["m"] = cfg.params.m;
  p["tau"] = cfg.params.tau;
  if (cfg.params.w) p["w"] = *cfg.params.w; else p["w"] = "auto";
  j["params"] = p;
  Json b;
  b["method"] = cfg.bound.method;
  b["t_max"] = cfg.bound.t_max;
  b["delta"] = cfg.bound.delta;
  b["epsilon"] = cfg.bound.epsilon;
  put(b, "r", cfg.bound.r);
  put(b, "c", cfg.bound.c);
  put(b, "c1", cfg.bound.c1);
  put(b, "c2", cfg.bound.c2);
  b["tol"] = cfg.bound.tol;
  b["expectation"] = cfg.bound.expectation;
  b["samples"] = cfg.bound.samples;
  b["g_route"] = cfg.bound.g_route;
  j["bound"] = b;
  Json t;
  t["mode"] = cfg.trial.mode;
  t["trials"] = cfg.trial.trials;
  t["population_risk"] = cfg.trial.population_risk;
  t["test_size"] = cfg.trial.test_size;
  j["trial"] = t;
  Json s;
  put(s, "sigma", cfg.sweep.sigma);
  put(s, "n", cfg.sweep.n);
  put(s, "m", cfg.sweep.m);
  put(s, "t", cfg.sweep.t);
  j["sweep"] = s;
  Json g;
  g["x_min"] = cfg.grid.x_min;
  g["x_max"] = cfg.grid.x_max;
  g["points"] = cfg.grid.points;
  g["t"] = cfg.grid.t;
  put(g, "sigma", cfg.grid.sigma);
  j["grid"] = g;
  return j;
}

inline Json make_manifest(const std::string& command, const RunConfig& cfg, double seconds) {
  Json m;
  m["command"] = command;
  m["tool_version"] = kToolVersion;
  m["seed"] = cfg.seed;
  m["duration_seconds"] = seconds;
  m["config"] = to_json(cfg);
  return m;
}

}  // namespace gmmssl::cli
