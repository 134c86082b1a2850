#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tar4c/connectivity.hpp"
#include "tar4c/errors.hpp"
#include "tar4c/inference.hpp"
#include "tar4c/simulate.hpp"
#include "tar4c/tar.hpp"

namespace tar4c {

using json = nlohmann::ordered_json;

namespace detail {

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(ErrorCode::EmptyFile, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(ErrorCode::UnknownFormat, path + ": " + e.what());
  }
  return j;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(ErrorCode::BadConfig, "field '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline TarConfig tar_config_from_json(const json& j) {
  TarConfig cfg;
  if (j.contains("p")) cfg.p1 = cfg.p2 = j.at("p").get<int>();
  if (j.contains("q")) cfg.q1 = cfg.q2 = j.at("q").get<int>();
  cfg.p1 = detail::get_or(j, "p1", cfg.p1);
  cfg.p2 = detail::get_or(j, "p2", cfg.p2);
  cfg.q1 = detail::get_or(j, "q1", cfg.q1);
  cfg.q2 = detail::get_or(j, "q2", cfg.q2);
  cfg.delays = detail::get_or(j, "delays", cfg.delays);
  if (j.contains("threshold_fn"))
    cfg.threshold_fn = threshold_fn_from_string(j.at("threshold_fn").get<std::string>());
  cfg.trim = detail::get_or(j, "trim", cfg.trim);
  cfg.min_regime_frac = detail::get_or(j, "min_regime_frac", cfg.min_regime_frac);
  cfg.validate();
  return cfg;
}

inline json tar_config_to_json(const TarConfig& cfg) {
  json j;
  j["p1"] = cfg.p1;
  j["p2"] = cfg.p2;
  j["q1"] = cfg.q1;
  j["q2"] = cfg.q2;
  j["delays"] = cfg.delays;
  j["threshold_fn"] = to_string(cfg.threshold_fn);
  j["trim"] = cfg.trim;
  j["min_regime_frac"] = cfg.min_regime_frac;
  return j;
}

inline TarSpec tar_spec_from_json(const json& j) {
  TarSpec spec;
  spec.regimes.clear();
  if (!j.contains("regimes") || !j.at("regimes").is_array())
    throw config_error(ErrorCode::BadConfig, "TarSpec: missing 'regimes' array");
  for (const auto& rj : j.at("regimes")) {
    RegimeSpec r;
    r.intercept = detail::get_or(rj, "intercept", 0.0);
    r.ar_coeffs = detail::get_or(rj, "ar", std::vector<double>{});
    r.x_coeffs = detail::get_or(rj, "x", std::vector<double>{});
    spec.regimes.push_back(std::move(r));
  }
  spec.thresholds = detail::get_or(j, "thresholds", std::vector<double>{});
  spec.delay = detail::get_or(j, "delay", 1);
  if (j.contains("threshold_fn"))
    spec.threshold_fn = threshold_fn_from_string(j.at("threshold_fn").get<std::string>());
  spec.noise_sd = detail::get_or(j, "noise_sd", 1.0);
  spec.validate();
  return spec;
}

inline json tar_spec_to_json(const TarSpec& spec) {
  json j;
  j["regimes"] = json::array();
  for (const auto& r : spec.regimes) {
    json rj;
    rj["intercept"] = r.intercept;
    rj["ar"] = r.ar_coeffs;
    rj["x"] = r.x_coeffs;
    j["regimes"].push_back(std::move(rj));
  }
  j["thresholds"] = spec.thresholds;
  j["delay"] = spec.delay;
  j["threshold_fn"] = to_string(spec.threshold_fn);
  j["noise_sd"] = spec.noise_sd;
  return j;
}

/// Simulation request: a network spec plus dataset shape and output naming.
struct SimSpec {
  NetworkSpec network;
  Eigen::Index T = 2000;
  int burn_in = 500;
  int n_subjects = 1;
  std::uint64_t seed = 0;
  double rate_hz = 160.0;
  int epoch_len = 0;  // 0 writes no annotations (whole recording = one epoch)
  std::string out_prefix = "subject";
};

inline SimSpec sim_spec_from_json(const json& j) {
  SimSpec s;
  NetworkSpec& n = s.network;
  n.n_nodes = detail::get_or(j, "n_nodes", 4);
  if (j.contains("x_spec")) n.x_spec = tar_spec_from_json(j.at("x_spec"));
  if (j.contains("edge_spec")) n.edge_spec = tar_spec_from_json(j.at("edge_spec"));
  if (j.contains("factor_spec")) n.factor_spec = tar_spec_from_json(j.at("factor_spec"));
  if (j.contains("loadings")) {
    const auto v = j.at("loadings").get<std::vector<double>>();
    n.loadings = Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                   static_cast<Eigen::Index>(v.size()));
  }
  n.noise_scale = detail::get_or(j, "noise_scale", 1.0);
  n.labels = detail::get_or(j, "labels", std::vector<std::string>{});
  s.T = detail::get_or(j, "T", static_cast<std::int64_t>(2000));
  s.burn_in = detail::get_or(j, "burn_in", 500);
  s.n_subjects = detail::get_or(j, "n_subjects", 1);
  s.seed = detail::get_or(j, "seed", static_cast<std::uint64_t>(0));
  s.rate_hz = detail::get_or(j, "rate_hz", 160.0);
  s.epoch_len = detail::get_or(j, "epoch_len", 0);
  s.out_prefix = detail::get_or(j, "out_prefix", std::string("subject"));
  n.validate();
  if (s.T < 1) throw config_error(ErrorCode::BadConfig, "SimSpec: T < 1");
  if (s.n_subjects < 1) throw config_error(ErrorCode::BadConfig, "SimSpec: n_subjects < 1");
  return s;
}

/// Full batch-run configuration (CLI flags can override scalar fields).
struct RunConfig {
  struct SubjectEntry {
    std::string id;
    std::string recording;
    std::string annotations;  // empty means one epoch spanning the recording
  };
  std::vector<SubjectEntry> subjects;
  std::vector<std::pair<std::string, std::string>> pairs;  // tested in both directions
  TarConfig tar;
  double alpha = 0.05;
  double majority = 0.7;
  int B = 500;
  int n_perm = 999;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool hetero_robust = false;
  std::string out_dir = "out";
  std::string format = "both";  // dot | json | both

  // Confound filter settings.
  double target_var = 0.85;
  int max_components = 3;
  int filter_len = 10;
  int reg_lags = 2;
  int span = 0;  // 0 = floor(sqrt(T)) per epoch

  // Representation stage.
  bool run_msc = true;
  int max_r_per_delay = 60;  // sup-Wald grid thinning inside mSC; 0 = full grid

  void validate() const {
    tar.validate();
    if (!(alpha > 0.0 && alpha < 1.0))
      throw config_error(ErrorCode::BadConfig, "alpha outside (0,1)");
    if (!(majority >= 0.0 && majority <= 1.0))
      throw config_error(ErrorCode::BadConfig, "majority outside [0,1]");
    if (B < 99) throw config_error(ErrorCode::BadConfig, "B must be >= 99");
    if (n_perm < 1) throw config_error(ErrorCode::BadConfig, "n_perm must be >= 1");
    if (jobs < 1) throw config_error(ErrorCode::BadConfig, "jobs must be >= 1");
    if (format != "dot" && format != "json" && format != "both")
      throw config_error(ErrorCode::UnknownFormat, "format must be dot, json, or both");
    for (const auto& p : pairs)
      if (p.first == p.second)
        throw config_error(ErrorCode::BadConfig, "pair maps a channel to itself");
  }
};

inline RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  if (j.contains("subjects")) {
    for (const auto& sj : j.at("subjects")) {
      RunConfig::SubjectEntry e;
      e.id = sj.at("id").get<std::string>();
      e.recording = sj.at("recording").get<std::string>();
      e.annotations = detail::get_or(sj, "annotations", std::string());
      cfg.subjects.push_back(std::move(e));
    }
  }
  if (j.contains("pairs")) {
    for (const auto& pj : j.at("pairs")) {
      if (!pj.is_array() || pj.size() != 2)
        throw config_error(ErrorCode::BadConfig, "each pair must be a 2-element array");
      cfg.pairs.emplace_back(pj.at(0).get<std::string>(), pj.at(1).get<std::string>());
    }
  }
  if (j.contains("tar")) cfg.tar = tar_config_from_json(j.at("tar"));
  cfg.alpha = detail::get_or(j, "alpha", cfg.alpha);
  cfg.majority = detail::get_or(j, "majority", cfg.majority);
  cfg.B = detail::get_or(j, "B", cfg.B);
  cfg.n_perm = detail::get_or(j, "n_perm", cfg.n_perm);
  cfg.seed = detail::get_or(j, "seed", cfg.seed);
  cfg.jobs = detail::get_or(j, "jobs", cfg.jobs);
  cfg.hetero_robust = detail::get_or(j, "hetero_robust", cfg.hetero_robust);
  cfg.out_dir = detail::get_or(j, "out_dir", cfg.out_dir);
  cfg.format = detail::get_or(j, "format", cfg.format);
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    cfg.target_var = detail::get_or(f, "target_var", cfg.target_var);
    cfg.max_components = detail::get_or(f, "max_components", cfg.max_components);
    cfg.filter_len = detail::get_or(f, "filter_len", cfg.filter_len);
    cfg.reg_lags = detail::get_or(f, "reg_lags", cfg.reg_lags);
    cfg.span = detail::get_or(f, "span", cfg.span);
  }
  if (j.contains("msc")) {
    const auto& m = j.at("msc");
    cfg.run_msc = detail::get_or(m, "enabled", cfg.run_msc);
    cfg.max_r_per_delay = detail::get_or(m, "max_r_per_delay", cfg.max_r_per_delay);
  }
  cfg.validate();
  return cfg;
}

inline json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["subjects"] = json::array();
  for (const auto& s : cfg.subjects)
    j["subjects"].push_back(
        {{"id", s.id}, {"recording", s.recording}, {"annotations", s.annotations}});
  j["pairs"] = json::array();
  for (const auto& p : cfg.pairs) j["pairs"].push_back({p.first, p.second});
  j["tar"] = tar_config_to_json(cfg.tar);
  j["alpha"] = cfg.alpha;
  j["majority"] = cfg.majority;
  j["B"] = cfg.B;
  j["n_perm"] = cfg.n_perm;
  j["seed"] = cfg.seed;
  j["hetero_robust"] = cfg.hetero_robust;
  j["format"] = cfg.format;
  j["filter"] = {{"target_var", cfg.target_var},
                 {"max_components", cfg.max_components},
                 {"filter_len", cfg.filter_len},
                 {"reg_lags", cfg.reg_lags},
                 {"span", cfg.span}};
  j["msc"] = {{"enabled", cfg.run_msc}, {"max_r_per_delay", cfg.max_r_per_delay}};
  return j;
}

/// Uniform test-record shape shared by every serialized test result.
inline json test_record(double statistic, double p, const std::string& method,
                        std::uint64_t seed, double r_hat, int d_hat, int df = -1,
                        int B = -1) {
  json j;
  j["statistic"] = statistic;
  if (df >= 0) j["df"] = df;
  j["p"] = p;
  j["method"] = method;
  j["seed"] = seed;
  if (B >= 0) j["B"] = B;
  j["grid"] = {{"r_hat", r_hat}, {"d_hat", d_hat}};
  return j;
}

inline json to_json(const LrTestResult& r) {
  return test_record(r.lr, r.p_boot,
                     r.hetero_robust ? "sup_lr_wild_bootstrap" : "sup_lr_bootstrap",
                     r.seed, r.r_hat, r.d_hat, -1, r.B);
}

inline json to_json(const WaldTestResult& r) {
  json j = test_record(r.delta, r.p, "wald_hc", 0, r.r_hat, r.d_hat, r.df);
  j.erase("seed");
  j["selector"] = r.selector;
  if (r.singular_fallback) j["singular_fallback"] = true;
  return j;
}

inline json to_json(const HotellingResult& r) {
  json j;
  j["statistic"] = r.t2;
  j["p"] = r.p;
  j["method"] = "hotelling_permutation";
  j["seed"] = r.seed;
  j["n_perm"] = r.n_perm;
  if (r.shrunk) j["covariance_shrunk"] = true;
  return j;
}

}  // namespace tar4c
