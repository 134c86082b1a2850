#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tar4c/errors.hpp"
#include "tar4c/rng.hpp"
#include "tar4c/series.hpp"
#include "tar4c/tar.hpp"

namespace tar4c {

/// One regime of a k-regime TAR process.
struct RegimeSpec {
  double intercept = 0.0;
  std::vector<double> ar_coeffs;  // on own lags
  std::vector<double> x_coeffs;   // on driver lags
};

/// Full generator specification: regimes, threshold partition, and how the
/// regime indicator reads the driver.
struct TarSpec {
  std::vector<RegimeSpec> regimes = {RegimeSpec{}};
  std::vector<double> thresholds;  // k-1 strictly increasing cut points
  int delay = 1;
  ThresholdFn threshold_fn = ThresholdFn::Identity;
  double noise_sd = 1.0;

  int k() const { return static_cast<int>(regimes.size()); }
  int max_p() const {
    std::size_t m = 0;
    for (const auto& r : regimes) m = std::max(m, r.ar_coeffs.size());
    return static_cast<int>(m);
  }
  int max_q() const {
    std::size_t m = 0;
    for (const auto& r : regimes) m = std::max(m, r.x_coeffs.size());
    return static_cast<int>(m);
  }

  void validate() const {
    if (regimes.empty())
      throw config_error(ErrorCode::BadConfig, "TarSpec: no regimes");
    if (thresholds.size() + 1 != regimes.size())
      throw config_error(ErrorCode::BadConfig,
                         "TarSpec: need exactly k-1 thresholds for k regimes");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
      if (!(thresholds[i - 1] < thresholds[i]))
        throw config_error(ErrorCode::BadConfig,
                           "TarSpec: thresholds must be strictly increasing");
    if (delay < 1) throw config_error(ErrorCode::BadConfig, "TarSpec: delay < 1");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
      throw config_error(ErrorCode::BadConfig, "TarSpec: bad noise_sd");
    for (const auto& r : regimes) {
      if (!std::isfinite(r.intercept))
        throw config_error(ErrorCode::BadConfig, "TarSpec: nonfinite intercept");
      for (double v : r.ar_coeffs)
        if (!std::isfinite(v))
          throw config_error(ErrorCode::BadConfig, "TarSpec: nonfinite AR coefficient");
      for (double v : r.x_coeffs)
        if (!std::isfinite(v))
          throw config_error(ErrorCode::BadConfig, "TarSpec: nonfinite driver coefficient");
    }
  }
};

/// Regime-wise explosiveness notes. A regime with coefficient mass >= 1 can
/// still combine into a stationary process, so these are advisories only.
inline std::vector<std::string> stationarity_advisories(const TarSpec& spec) {
  std::vector<std::string> notes;
  for (std::size_t j = 0; j < spec.regimes.size(); ++j) {
    double s = 0.0;
    for (double v : spec.regimes[j].ar_coeffs) s += std::abs(v);
    if (s >= 1.0)
      notes.push_back("regime " + std::to_string(j + 1) + " has sum|phi| = " +
                      std::to_string(s) + " >= 1; process may drift");
  }
  return notes;
}

namespace detail {

inline const RegimeSpec& active_regime(const TarSpec& spec, double v) {
  // I(r_{j-1} < v <= r_j) with r_0 = -inf, r_k = +inf.
  std::size_t j = 0;
  while (j < spec.thresholds.size() && v > spec.thresholds[j]) ++j;
  return spec.regimes[j];
}

/// Iterate the recursion over [0, total) with zero pre-sample values. The
/// driver z must cover the same index range when any regime uses it.
inline Eigen::VectorXd tar_path(const TarSpec& spec, const Eigen::VectorXd& z,
                                Eigen::Index total, std::mt19937_64& gen,
                                bool self_exciting) {
  const bool needs_driver = spec.max_q() > 0 || (!self_exciting && spec.k() > 1);
  if (needs_driver && z.size() < total)
    throw data_error(ErrorCode::DimensionMismatch,
                     "gen_tar: driver shorter than requested path");
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  Eigen::VectorXd y(total);
  auto yv = [&](Eigen::Index t) { return t >= 0 ? y(t) : 0.0; };
  auto zv = [&](Eigen::Index t) { return (t >= 0 && t < z.size()) ? z(t) : 0.0; };
  for (Eigen::Index t = 0; t < total; ++t) {
    const double src = self_exciting ? yv(t - spec.delay) : zv(t - spec.delay);
    const RegimeSpec& reg =
        spec.k() == 1 ? spec.regimes.front()
                      : active_regime(spec, apply_threshold_fn(spec.threshold_fn, src));
    double v = reg.intercept;
    for (std::size_t i = 0; i < reg.ar_coeffs.size(); ++i)
      v += reg.ar_coeffs[i] * yv(t - 1 - static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < reg.x_coeffs.size(); ++i)
      v += reg.x_coeffs[i] * zv(t - 1 - static_cast<Eigen::Index>(i));
    v += noise(gen);
    if (!(std::abs(v) <= 1e8))
      throw numeric_error(ErrorCode::NonFiniteSample,
                          "gen_tar: sample exploded at t=" + std::to_string(t) +
                              " (|y| > 1e8)");
    y(t) = v;
  }
  return y;
}

}  // namespace detail

/// Generate T samples of the k-regime process driven by z; the first burn_in
/// samples are discarded. z must cover T + burn_in samples whenever the spec
/// reads the driver. self_exciting switches the regime source to the process's
/// own past.
inline Eigen::VectorXd gen_tar(const TarSpec& spec, const Eigen::VectorXd& z,
                               Eigen::Index T, int burn_in, std::uint64_t seed,
                               bool self_exciting = false) {
  spec.validate();
  if (burn_in < 200)
    throw config_error(ErrorCode::BadConfig, "gen_tar: burn_in must be >= 200");
  if (T < 1) throw config_error(ErrorCode::BadConfig, "gen_tar: T < 1");
  auto gen = substream(seed, 0);
  const Eigen::VectorXd path =
      detail::tar_path(spec, z, T + burn_in, gen, self_exciting);
  return path.tail(T);
}

/// Driver-plus-response pair with known causal structure: x follows x_spec on
/// its own (typically a plain AR), y follows edge_spec with x as the driver.
/// Both series share the time grid after a common burn-in.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gen_causal_pair(
    const TarSpec& x_spec, const TarSpec& edge_spec, Eigen::Index T, int burn_in,
    std::uint64_t seed) {
  x_spec.validate();
  edge_spec.validate();
  if (burn_in < 200)
    throw config_error(ErrorCode::BadConfig, "gen_causal_pair: burn_in must be >= 200");
  if (x_spec.max_q() > 0)
    throw config_error(ErrorCode::BadConfig,
                       "gen_causal_pair: x_spec cannot itself have a driver");
  auto gx = substream(seed, 1);
  auto gy = substream(seed, 2);
  const Eigen::Index total = T + burn_in;
  const Eigen::VectorXd none;
  const Eigen::VectorXd x =
      detail::tar_path(x_spec, none, total, gx, x_spec.k() > 1);
  const Eigen::VectorXd y =
      detail::tar_path(edge_spec, x, total, gy,
                       edge_spec.threshold_fn == ThresholdFn::SelfExciting);
  return {x.tail(T), y.tail(T)};
}

/// Network generator: a causal pair observed through additive loadings on a
/// latent factor, alongside n-2 bystander channels built from the same factor
/// plus idiosyncratic noise.
struct NetworkSpec {
  int n_nodes = 4;
  TarSpec x_spec;
  TarSpec edge_spec;
  TarSpec factor_spec;
  Eigen::VectorXd loadings;  // one per node; empty means all zero
  double noise_scale = 1.0;  // idiosyncratic noise sd on bystander channels
  std::vector<std::string> labels;

  void validate() const {
    if (n_nodes < 2) throw config_error(ErrorCode::BadConfig, "NetworkSpec: n_nodes < 2");
    if (loadings.size() != 0 && loadings.size() != n_nodes)
      throw config_error(ErrorCode::BadConfig,
                         "NetworkSpec: loadings length must equal n_nodes");
    if (loadings.size() != 0 && !loadings.allFinite())
      throw config_error(ErrorCode::BadConfig, "NetworkSpec: nonfinite loading");
    if (!labels.empty() && static_cast<int>(labels.size()) != n_nodes)
      throw config_error(ErrorCode::BadConfig,
                         "NetworkSpec: labels length must equal n_nodes");
  }
};

struct ConfoundedNetwork {
  ChannelMatrix channels;   // columns: X*, Y*, then bystanders
  Eigen::VectorXd clean_x;  // ground truth kept for filter validation
  Eigen::VectorXd clean_y;
  Eigen::VectorXd factor;
};

inline ConfoundedNetwork gen_confounded_network(const NetworkSpec& spec, Eigen::Index T,
                                                std::uint64_t seed, int burn_in = 500) {
  spec.validate();
  spec.factor_spec.validate();
  auto [x, y] = gen_causal_pair(spec.x_spec, spec.edge_spec, T, burn_in, seed);

  auto gf = substream(seed, 3);
  const Eigen::VectorXd none;
  const Eigen::VectorXd f =
      detail::tar_path(spec.factor_spec, none, T + burn_in, gf,
                       spec.factor_spec.k() > 1)
          .tail(T);

  Eigen::VectorXd load = spec.loadings;
  if (load.size() == 0) load = Eigen::VectorXd::Zero(spec.n_nodes);

  ConfoundedNetwork net;
  net.clean_x = x;
  net.clean_y = y;
  net.factor = f;
  net.channels.data.resize(T, spec.n_nodes);
  net.channels.data.col(0) = x + load(0) * f;
  net.channels.data.col(1) = y + load(1) * f;
  for (int j = 2; j < spec.n_nodes; ++j) {
    auto gz = substream(seed, 4 + static_cast<std::uint64_t>(j));
    std::normal_distribution<double> noise(0.0, spec.noise_scale);
    Eigen::VectorXd e(T);
    for (Eigen::Index t = 0; t < T; ++t) e(t) = noise(gz);
    net.channels.data.col(j) = load(j) * f + e;
  }
  if (spec.labels.empty()) {
    net.channels.labels = {"X", "Y"};
    for (int j = 2; j < spec.n_nodes; ++j)
      net.channels.labels.push_back("Z" + std::to_string(j - 1));
  } else {
    net.channels.labels = spec.labels;
  }
  net.channels.validate();
  return net;
}

}  // namespace tar4c
