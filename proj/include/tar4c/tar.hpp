#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "tar4c/errors.hpp"
#include "tar4c/ols.hpp"
#include "tar4c/series.hpp"

namespace tar4c {

/// Functional applied to the lagged driver to form the threshold variable.
enum class ThresholdFn { Identity, Abs, Square, SelfExciting };

inline std::string to_string(ThresholdFn fn) {
  switch (fn) {
    case ThresholdFn::Identity: return "identity";
    case ThresholdFn::Abs: return "abs";
    case ThresholdFn::Square: return "square";
    case ThresholdFn::SelfExciting: return "self_exciting";
  }
  return "identity";
}

inline ThresholdFn threshold_fn_from_string(const std::string& s) {
  if (s == "identity") return ThresholdFn::Identity;
  if (s == "abs") return ThresholdFn::Abs;
  if (s == "square") return ThresholdFn::Square;
  if (s == "self_exciting") return ThresholdFn::SelfExciting;
  throw config_error(ErrorCode::BadConfig, "unknown threshold functional '" + s + "'");
}

inline double apply_threshold_fn(ThresholdFn fn, double v) {
  switch (fn) {
    case ThresholdFn::Abs: return std::abs(v);
    case ThresholdFn::Square: return v * v;
    default: return v;  // identity; self_exciting changes the source, not the map
  }
}

/// Hyperparameter set for the 2-regime causal TAR model.
struct TarConfig {
  int p1 = 12, p2 = 12;          // per-regime AR lag orders for the response
  int q1 = 12, q2 = 12;          // per-regime lag orders for the driver
  std::vector<int> delays = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  ThresholdFn threshold_fn = ThresholdFn::Identity;
  double trim = 0.15;            // fraction of sorted threshold values cut per tail
  double min_regime_frac = 0.10;

  int max_p() const { return std::max(p1, p2); }
  int max_q() const { return std::max(q1, q2); }
  int max_delay() const {
    int d = 0;
    for (int v : delays) d = std::max(d, v);
    return d;
  }
  bool equal_orders() const { return p1 == p2 && q1 == q2; }

  TarConfig with_delay(int d) const {
    TarConfig c = *this;
    c.delays = {d};
    return c;
  }
  TarConfig with_orders(int np1, int np2, int nq1, int nq2) const {
    TarConfig c = *this;
    c.p1 = np1;
    c.p2 = np2;
    c.q1 = nq1;
    c.q2 = nq2;
    return c;
  }

  void validate() const {
    if (p1 < 0 || p2 < 0 || q1 < 0 || q2 < 0)
      throw config_error(ErrorCode::BadConfig, "lag orders must be nonnegative");
    if (p1 + p2 < 1)
      throw config_error(ErrorCode::BadConfig, "p1 + p2 must be at least 1");
    if (delays.empty())
      throw config_error(ErrorCode::BadConfig, "delay set is empty");
    for (int d : delays)
      if (d < 1) throw config_error(ErrorCode::BadConfig, "delays must be >= 1");
    if (trim < 0.0 || trim >= 0.5)
      throw config_error(ErrorCode::BadConfig, "trim must lie in [0, 0.5)");
    if (min_regime_frac < 0.0 || min_regime_frac >= 0.5)
      throw config_error(ErrorCode::BadConfig, "min_regime_frac must lie in [0, 0.5)");
  }
};

/// Lagged values of the threshold source passed through the functional:
/// element i is u(x_{i}) standing for response time t = i + d, so index t - d - 1
/// in 1-based prose. Alignment matches build_design rows.
inline Eigen::VectorXd threshold_series(const Eigen::VectorXd& x, int d, ThresholdFn fn) {
  if (d < 1) throw config_error(ErrorCode::BadConfig, "delay must be >= 1");
  if (x.size() <= d)
    throw data_error(ErrorCode::SeriesTooShort, "threshold_series: len(x) <= d");
  Eigen::VectorXd out(x.size() - d);
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = apply_threshold_fn(fn, x(i));
  return out;
}

/// Shared regression sample for one (y, x) pair. Responses start at
/// t0 = max(p_max, q_max, max delay) so that every delay in the grid sees the
/// same rows and the linear (M1) SSR is common across the whole search.
struct TarData {
  Eigen::VectorXd y;        // responses, y(t0 + i)
  Eigen::MatrixXd X;        // rows x (1 + p_max + q_max)
  Eigen::VectorXd y_full;   // original series (threshold source for self-exciting)
  Eigen::VectorXd x_full;
  int t0 = 0;
  int p_max = 0, q_max = 0;

  Eigen::Index rows() const { return y.size(); }
};

/// t0_min lets callers align samples across configurations (for example, an
/// order grid sharing one response window).
inline TarData make_tar_data(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                             const TarConfig& cfg, int t0_min = 0) {
  cfg.validate();
  if (y.size() != x.size())
    throw data_error(ErrorCode::DimensionMismatch, "make_tar_data: series length mismatch");
  const int p = cfg.max_p();
  const int q = cfg.max_q();
  const int t0 = std::max({p, q, cfg.max_delay(), t0_min});
  const Eigen::Index T = y.size();
  if (T <= t0)
    throw data_error(ErrorCode::SeriesTooShort,
                     "make_tar_data: T=" + std::to_string(T) +
                         " too short for lags/delay start " + std::to_string(t0));
  TarData d;
  d.y_full = y;
  d.x_full = x;
  d.t0 = t0;
  d.p_max = p;
  d.q_max = q;
  const Eigen::Index n = T - t0;
  d.y.resize(n);
  d.X.resize(n, 1 + p + q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index t = t0 + i;
    d.y(i) = y(t);
    d.X(i, 0) = 1.0;
    for (int k = 1; k <= p; ++k) d.X(i, k) = y(t - k);
    for (int k = 1; k <= q; ++k) d.X(i, p + k) = x(t - k);
  }
  return d;
}

/// Threshold value per design row for delay d: u(src_{t-d}) with t the row's
/// response time.
inline Eigen::VectorXd row_threshold(const TarData& data, int d, ThresholdFn fn) {
  if (d < 1 || d > data.t0)
    throw config_error(ErrorCode::BadConfig,
                       "row_threshold: delay " + std::to_string(d) +
                           " outside prepared range (t0=" + std::to_string(data.t0) + ")");
  const Eigen::VectorXd& src =
      (fn == ThresholdFn::SelfExciting) ? data.y_full : data.x_full;
  Eigen::VectorXd out(data.rows());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = apply_threshold_fn(fn, src(data.t0 + i - d));
  return out;
}

/// Linear ADL fit (model M1).
struct LinearFit {
  Eigen::VectorXd pi1;
  Eigen::VectorXd residuals;
  double ssr = 0.0;
  std::vector<int> dropped;
};

inline LinearFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  OlsFit f = ols_fit(X, y);
  LinearFit out;
  out.pi1 = std::move(f.beta);
  out.residuals = std::move(f.residuals);
  out.ssr = f.ssr;
  out.dropped = std::move(f.dropped);
  return out;
}

/// Two-regime TAR fit at chosen or searched (r, d).
struct TarFit {
  Eigen::VectorXd phi1, phi2;      // (intercept, AR coefficients) per regime
  Eigen::VectorXd theta1, theta2;  // driver-lag coefficients per regime
  Eigen::VectorXd beta1, beta2;    // full design-width vectors, zeros off-regime
  double r_hat = 0.0;
  int d_hat = 0;
  double ssr = 0.0;                // ssr1 + ssr2
  double ssr1 = 0.0, ssr2 = 0.0;
  Eigen::VectorXd residuals;       // aligned with design rows
  std::vector<std::uint8_t> in_upper;  // 1 where threshold > r (regime 2)
  Eigen::Index n1 = 0, n2 = 0;
};

namespace detail {

/// Design column subset for one regime of a possibly order-asymmetric model.
struct RegimeCols {
  std::vector<int> cols;  // into the shared (1, p_max y-lags, q_max x-lags) design
  int p = 0, q = 0;
  int width() const { return static_cast<int>(cols.size()); }
};

inline RegimeCols regime_cols(int p, int q, int p_max, int q_max) {
  RegimeCols rc;
  rc.p = p;
  rc.q = q;
  rc.cols.push_back(0);
  for (int i = 1; i <= p; ++i) rc.cols.push_back(i);
  for (int j = 1; j <= q; ++j) rc.cols.push_back(p_max + j);
  (void)q_max;
  return rc;
}

inline Eigen::MatrixXd select_cols(const Eigen::MatrixXd& X, const RegimeCols& rc) {
  Eigen::MatrixXd out(X.rows(), rc.width());
  for (int k = 0; k < rc.width(); ++k) out.col(k) = X.col(rc.cols[k]);
  return out;
}

/// Smallest regime size satisfying the sample-fraction floor and regime rank.
inline Eigen::Index min_regime_count(double frac, Eigen::Index n, int width) {
  const double raw = frac * static_cast<double>(n);
  Eigen::Index k = static_cast<Eigen::Index>(std::ceil(raw - 1e-9));
  return std::max<Eigen::Index>({k, width, 1});
}

/// SSR profile over growing prefixes of pre-sorted rows, by recursive least
/// squares. ssr[j] = OLS SSR of rows [0..j]; entries below j = n0-1 stay NaN.
/// Returns false when the starting block is rank deficient or an update turns
/// unstable; callers then fall back to per-candidate decompositions.
inline bool rls_prefix_profile(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys,
                               Eigen::Index n0, std::vector<double>& ssr) {
  const Eigen::Index n = Xs.rows();
  const Eigen::Index m = Xs.cols();
  ssr.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  if (n0 < m || n0 > n) return false;

  const Eigen::MatrixXd B = Xs.topRows(n0);
  Eigen::MatrixXd M = B.transpose() * B;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success) return false;
  Eigen::MatrixXd Minv = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
  if ((M * Minv - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-6)
    return false;

  Eigen::VectorXd beta = ldlt.solve(B.transpose() * ys.head(n0));
  double s = (ys.head(n0) - B * beta).squaredNorm();
  ssr[static_cast<std::size_t>(n0 - 1)] = s;

  Eigen::VectorXd k(m);
  for (Eigen::Index j = n0; j < n; ++j) {
    const auto w = Xs.row(j).transpose();
    k.noalias() = Minv * w;
    const double denom = 1.0 + w.dot(k);
    if (!(denom > 1e-12)) return false;
    const double e = ys(j) - w.dot(beta);
    beta.noalias() += k * (e / denom);
    Minv.noalias() -= (k * k.transpose()) / denom;
    s += e * e / denom;
    ssr[static_cast<std::size_t>(j)] = s;
  }
  return true;
}

struct SplitCandidate {
  double r = 0.0;
  Eigen::Index split = 0;  // regime 1 = sorted rows [0..split]
};

/// Candidate threshold values for one delay: observed values inside the
/// [trim, 1-trim] quantile band whose split leaves both regimes at or above
/// their minimum counts. Rows sharing a threshold value always move together.
inline std::vector<SplitCandidate> split_candidates(const Eigen::VectorXd& thr_sorted,
                                                    double trim, Eigen::Index min1,
                                                    Eigen::Index min2) {
  const Eigen::Index n = thr_sorted.size();
  std::vector<SplitCandidate> out;
  if (n < 2) return out;
  const Eigen::Index cut = static_cast<Eigen::Index>(
      std::floor(trim * static_cast<double>(n)));
  const double v_lo = thr_sorted(cut);
  const double v_hi = thr_sorted(n - 1 - cut);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (thr_sorted(k) == thr_sorted(k + 1)) continue;  // ties move together
    const double v = thr_sorted(k);
    if (v < v_lo || v > v_hi) continue;
    if (k + 1 < min1 || n - k - 1 < min2) continue;
    out.push_back({v, k});
  }
  return out;
}

}  // namespace detail

/// Candidate threshold values the grid search would consider for one delay.
inline std::vector<double> grid_candidates(const TarData& data, const TarConfig& cfg,
                                           int d) {
  const Eigen::Index n = data.rows();
  const int p_max = cfg.max_p();
  const int q_max = cfg.max_q();
  const detail::RegimeCols rc1 = detail::regime_cols(cfg.p1, cfg.q1, p_max, q_max);
  const detail::RegimeCols rc2 = detail::regime_cols(cfg.p2, cfg.q2, p_max, q_max);
  const Eigen::Index min1 = detail::min_regime_count(cfg.min_regime_frac, n, rc1.width());
  const Eigen::Index min2 = detail::min_regime_count(cfg.min_regime_frac, n, rc2.width());
  Eigen::VectorXd thr = row_threshold(data, d, cfg.threshold_fn);
  std::sort(thr.data(), thr.data() + thr.size());
  std::vector<double> out;
  for (const auto& c : detail::split_candidates(thr, cfg.trim, min1, min2))
    out.push_back(c.r);
  return out;
}

/// Fit the 2-regime model at a fixed split: indicator is thr <= r for regime 1,
/// thr > r for regime 2. Each regime is an independent OLS; the reported ssr is
/// the exact sum of the two per-regime SSRs.
inline TarFit fit_tar_at(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& thr, double r, const TarConfig& cfg) {
  if (X.rows() != y.size() || X.rows() != thr.size())
    throw data_error(ErrorCode::DimensionMismatch, "fit_tar_at: row count mismatch");
  const Eigen::Index n = X.rows();
  const int p_max = cfg.max_p();
  const int q_max = cfg.max_q();
  if (X.cols() != 1 + p_max + q_max)
    throw data_error(ErrorCode::DimensionMismatch, "fit_tar_at: design width mismatch");

  const detail::RegimeCols rc1 = detail::regime_cols(cfg.p1, cfg.q1, p_max, q_max);
  const detail::RegimeCols rc2 = detail::regime_cols(cfg.p2, cfg.q2, p_max, q_max);
  const Eigen::Index min1 = detail::min_regime_count(cfg.min_regime_frac, n, rc1.width());
  const Eigen::Index min2 = detail::min_regime_count(cfg.min_regime_frac, n, rc2.width());

  std::vector<Eigen::Index> low, high;
  for (Eigen::Index i = 0; i < n; ++i)
    (thr(i) <= r ? low : high).push_back(i);
  if (static_cast<Eigen::Index>(low.size()) < min1 ||
      static_cast<Eigen::Index>(high.size()) < min2)
    throw numeric_error(ErrorCode::RegimeTooSmall,
                        "fit_tar_at: regime sizes " + std::to_string(low.size()) + "/" +
                            std::to_string(high.size()) + " below minimum " +
                            std::to_string(min1) + "/" + std::to_string(min2));

  auto gather = [&](const std::vector<Eigen::Index>& idx, const detail::RegimeCols& rc,
                    Eigen::MatrixXd& Xr, Eigen::VectorXd& yr) {
    Xr.resize(static_cast<Eigen::Index>(idx.size()), rc.width());
    yr.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (int k = 0; k < rc.width(); ++k) Xr(static_cast<Eigen::Index>(i), k) = X(idx[i], rc.cols[k]);
      yr(static_cast<Eigen::Index>(i)) = y(idx[i]);
    }
  };

  Eigen::MatrixXd X1, X2;
  Eigen::VectorXd y1, y2;
  gather(low, rc1, X1, y1);
  gather(high, rc2, X2, y2);
  const OlsFit f1 = ols_fit(X1, y1);
  const OlsFit f2 = ols_fit(X2, y2);

  TarFit fit;
  fit.r_hat = r;
  fit.ssr1 = f1.ssr;
  fit.ssr2 = f2.ssr;
  fit.ssr = f1.ssr + f2.ssr;
  fit.n1 = static_cast<Eigen::Index>(low.size());
  fit.n2 = static_cast<Eigen::Index>(high.size());
  fit.beta1 = Eigen::VectorXd::Zero(X.cols());
  fit.beta2 = Eigen::VectorXd::Zero(X.cols());
  for (int k = 0; k < rc1.width(); ++k) fit.beta1(rc1.cols[k]) = f1.beta(k);
  for (int k = 0; k < rc2.width(); ++k) fit.beta2(rc2.cols[k]) = f2.beta(k);

  fit.phi1.resize(rc1.p + 1);
  fit.phi2.resize(rc2.p + 1);
  fit.phi1(0) = fit.beta1(0);
  fit.phi2(0) = fit.beta2(0);
  for (int i = 1; i <= rc1.p; ++i) fit.phi1(i) = fit.beta1(i);
  for (int i = 1; i <= rc2.p; ++i) fit.phi2(i) = fit.beta2(i);
  fit.theta1.resize(rc1.q);
  fit.theta2.resize(rc2.q);
  for (int j = 1; j <= rc1.q; ++j) fit.theta1(j - 1) = fit.beta1(p_max + j);
  for (int j = 1; j <= rc2.q; ++j) fit.theta2(j - 1) = fit.beta2(p_max + j);

  fit.residuals.resize(n);
  fit.in_upper.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < low.size(); ++i) fit.residuals(low[i]) = f1.residuals(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < high.size(); ++i) {
    fit.residuals(high[i]) = f2.residuals(static_cast<Eigen::Index>(i));
    fit.in_upper[static_cast<std::size_t>(high[i])] = 1;
  }
  return fit;
}

/// Arranged-autoregression grid search over candidate thresholds and delays.
/// Minimizes the combined SSR; ties break toward the smaller delay, then the
/// smaller threshold. The winning cell is refit exactly before returning.
inline TarFit grid_fit(const TarData& data, const TarConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = data.rows();
  const int p_max = cfg.max_p();
  const int q_max = cfg.max_q();
  const detail::RegimeCols rc1 = detail::regime_cols(cfg.p1, cfg.q1, p_max, q_max);
  const detail::RegimeCols rc2 = detail::regime_cols(cfg.p2, cfg.q2, p_max, q_max);
  const Eigen::Index min1 = detail::min_regime_count(cfg.min_regime_frac, n, rc1.width());
  const Eigen::Index min2 = detail::min_regime_count(cfg.min_regime_frac, n, rc2.width());

  double best_ssr = std::numeric_limits<double>::infinity();
  double best_r = 0.0;
  int best_d = 0;
  bool found = false;

  std::vector<int> delays = cfg.delays;
  std::sort(delays.begin(), delays.end());
  delays.erase(std::unique(delays.begin(), delays.end()), delays.end());

  for (int d : delays) {
    const Eigen::VectorXd thr = row_threshold(data, d, cfg.threshold_fn);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (thr(a) != thr(b)) return thr(a) < thr(b);
      return a < b;
    });
    Eigen::VectorXd thr_sorted(n);
    Eigen::VectorXd ys(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      thr_sorted(i) = thr(order[static_cast<std::size_t>(i)]);
      ys(i) = data.y(order[static_cast<std::size_t>(i)]);
    }

    const auto candidates = detail::split_candidates(thr_sorted, cfg.trim, min1, min2);
    if (candidates.empty()) continue;

    Eigen::MatrixXd Xs1(n, rc1.width());
    Eigen::MatrixXd Xs2(n, rc2.width());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index src = order[static_cast<std::size_t>(i)];
      for (int k = 0; k < rc1.width(); ++k) Xs1(i, k) = data.X(src, rc1.cols[k]);
      for (int k = 0; k < rc2.width(); ++k) Xs2(i, k) = data.X(src, rc2.cols[k]);
    }

    // Suffix profile == prefix profile of the reversed rows.
    std::vector<double> ssr_low, ssr_high_rev;
    Eigen::MatrixXd Xrev(n, rc2.width());
    Eigen::VectorXd yrev(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Xrev.row(i) = Xs2.row(n - 1 - i);
      yrev(i) = ys(n - 1 - i);
    }
    const bool fast = detail::rls_prefix_profile(Xs1, ys, min1, ssr_low) &&
                      detail::rls_prefix_profile(Xrev, yrev, min2, ssr_high_rev);

    for (const auto& c : candidates) {
      double total;
      if (fast) {
        const double s1 = ssr_low[static_cast<std::size_t>(c.split)];
        const double s2 = ssr_high_rev[static_cast<std::size_t>(n - c.split - 2)];
        if (std::isnan(s1) || std::isnan(s2)) continue;
        total = s1 + s2;
      } else {
        try {
          total = fit_tar_at(data.X, data.y, thr, c.r, cfg).ssr;
        } catch (const Error&) {
          continue;
        }
      }
      if (total < best_ssr) {
        best_ssr = total;
        best_r = c.r;
        best_d = d;
        found = true;
      }
    }
  }

  if (!found)
    throw numeric_error(ErrorCode::NoFeasibleSplit,
                        "grid_fit: no candidate threshold satisfies the regime minimums");

  const Eigen::VectorXd thr = row_threshold(data, best_d, cfg.threshold_fn);
  TarFit fit = fit_tar_at(data.X, data.y, thr, best_r, cfg);
  fit.d_hat = best_d;
  return fit;
}

/// Convenience wrapper: build the shared sample and run the grid search.
inline TarFit tar_grid_fit(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                           const TarConfig& cfg) {
  const TarData data = make_tar_data(y, x, cfg);
  return grid_fit(data, cfg);
}

}  // namespace tar4c
