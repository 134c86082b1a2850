#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tar4c/errors.hpp"
#include "tar4c/parallel.hpp"
#include "tar4c/rng.hpp"
#include "tar4c/stats.hpp"
#include "tar4c/tar.hpp"

namespace tar4c {

/// Likelihood-ratio style statistic comparing the linear model against the
/// threshold model: T * (S_lin - S_tar) / S_tar.
inline double lr_statistic(double linear_ssr, double tar_ssr, Eigen::Index t_eff) {
  if (!(tar_ssr > 0.0))
    throw numeric_error(ErrorCode::ZeroResidual, "lr_statistic: perfect threshold fit");
  const double lr = static_cast<double>(t_eff) * (linear_ssr - tar_ssr) / tar_ssr;
  return std::max(lr, 0.0);
}

struct LrTestResult {
  double lr = 0.0;
  double p_boot = 1.0;
  std::vector<double> boot_draws;
  double r_hat = 0.0;
  int d_hat = 0;
  bool hetero_robust = false;
  bool degenerate = false;  // tar SSR hit zero, lr reported as +inf
  std::uint64_t seed = 0;
  int B = 0;
};

struct BootstrapOptions {
  int B = 500;
  std::uint64_t seed = 0;
  bool hetero_robust = false;
  int jobs = 1;
};

namespace detail {

/// Observed sup-LR on a prepared sample.
inline void observed_lr(const TarData& data, const TarConfig& cfg, LrTestResult& out,
                        double& linear_ssr) {
  linear_ssr = fit_linear(data.X, data.y).ssr;
  const TarFit fit = grid_fit(data, cfg);
  out.r_hat = fit.r_hat;
  out.d_hat = fit.d_hat;
  if (fit.ssr > 0.0) {
    out.lr = lr_statistic(linear_ssr, fit.ssr, data.rows());
  } else {
    out.lr = std::numeric_limits<double>::infinity();
    out.degenerate = true;
  }
}

/// Rebuild a response path from the fitted linear recursion with the observed
/// pre-sample values and innovations eps (one per design row).
inline Eigen::VectorXd rebuild_linear_path(const TarData& data,
                                           const Eigen::VectorXd& pi,
                                           const Eigen::VectorXd& eps) {
  const int p = data.p_max;
  const int q = data.q_max;
  const Eigen::Index T = data.y_full.size();
  Eigen::VectorXd ystar = data.y_full;
  for (Eigen::Index t = data.t0; t < T; ++t) {
    double v = pi(0);
    for (int k = 1; k <= p; ++k) v += pi(k) * ystar(t - k);
    for (int k = 1; k <= q; ++k) v += pi(p + k) * data.x_full(t - k);
    ystar(t) = v + eps(t - data.t0);
  }
  return ystar;
}

}  // namespace detail

/// Residual-bootstrap test of linearity against the threshold alternative.
/// The null model is the linear fit; replicate responses follow its recursion
/// with resampled centered residuals (or the originals under Rademacher signs
/// when hetero_robust is set), and the sup-LR is recomputed on the same grid.
inline LrTestResult bootstrap_linearity(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                                        const TarConfig& cfg, const BootstrapOptions& opt) {
  if (opt.B < 99)
    throw config_error(ErrorCode::BadConfig, "bootstrap_linearity: B must be >= 99");
  const TarData data = make_tar_data(y, x, cfg);

  LrTestResult out;
  out.hetero_robust = opt.hetero_robust;
  out.seed = opt.seed;
  out.B = opt.B;

  const LinearFit lin = fit_linear(data.X, data.y);
  double linear_ssr = 0.0;
  detail::observed_lr(data, cfg, out, linear_ssr);

  const Eigen::Index n = data.rows();
  Eigen::VectorXd centered = lin.residuals;
  centered.array() -= centered.mean();

  out.boot_draws.assign(static_cast<std::size_t>(opt.B), 0.0);
  parallel_for(static_cast<std::size_t>(opt.B), opt.jobs, [&](std::size_t b) {
    auto gen = substream(opt.seed, static_cast<std::uint64_t>(b) + 1);
    Eigen::VectorXd eps(n);
    if (opt.hetero_robust) {
      std::uniform_int_distribution<int> coin(0, 1);
      for (Eigen::Index i = 0; i < n; ++i)
        eps(i) = lin.residuals(i) * (coin(gen) ? 1.0 : -1.0);
    } else {
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      for (Eigen::Index i = 0; i < n; ++i) eps(i) = centered(pick(gen));
    }
    const Eigen::VectorXd ystar = detail::rebuild_linear_path(data, lin.pi1, eps);
    const TarData bdata = make_tar_data(ystar, data.x_full, cfg);
    const double lin_b = fit_linear(bdata.X, bdata.y).ssr;
    const TarFit fit_b = grid_fit(bdata, cfg);
    out.boot_draws[b] = (fit_b.ssr > 0.0)
                            ? lr_statistic(lin_b, fit_b.ssr, bdata.rows())
                            : std::numeric_limits<double>::infinity();
  });

  int exceed = 0;
  for (double v : out.boot_draws)
    if (v >= out.lr) ++exceed;
  out.p_boot = (1.0 + exceed) / (opt.B + 1.0);
  return out;
}

/// Per-delay linearity tests sharing one bootstrap: the null model and its
/// replicate paths do not depend on the delay, so each resampled path is
/// scored once per delay. Returns one result per entry of cfg.delays, in
/// cfg.delays order; marginally each p-value matches an independent bootstrap
/// of that delay alone.
inline std::vector<LrTestResult> bootstrap_linearity_by_delay(
    const Eigen::VectorXd& y, const Eigen::VectorXd& x, const TarConfig& cfg,
    const BootstrapOptions& opt) {
  if (opt.B < 99)
    throw config_error(ErrorCode::BadConfig, "bootstrap_linearity_by_delay: B must be >= 99");
  cfg.validate();
  const TarData data = make_tar_data(y, x, cfg);
  const Eigen::Index n = data.rows();
  const std::size_t D = cfg.delays.size();

  const LinearFit lin = fit_linear(data.X, data.y);
  Eigen::VectorXd centered = lin.residuals;
  centered.array() -= centered.mean();

  std::vector<LrTestResult> out(D);
  for (std::size_t i = 0; i < D; ++i) {
    LrTestResult& r = out[i];
    r.hetero_robust = opt.hetero_robust;
    r.seed = opt.seed;
    r.B = opt.B;
    const TarConfig cfg_d = cfg.with_delay(cfg.delays[i]);
    const TarFit fit = grid_fit(data, cfg_d);
    r.r_hat = fit.r_hat;
    r.d_hat = fit.d_hat;
    if (fit.ssr > 0.0) {
      r.lr = lr_statistic(lin.ssr, fit.ssr, n);
    } else {
      r.lr = std::numeric_limits<double>::infinity();
      r.degenerate = true;
    }
    r.boot_draws.assign(static_cast<std::size_t>(opt.B), 0.0);
  }

  parallel_for(static_cast<std::size_t>(opt.B), opt.jobs, [&](std::size_t b) {
    auto gen = substream(opt.seed, static_cast<std::uint64_t>(b) + 1);
    Eigen::VectorXd eps(n);
    if (opt.hetero_robust) {
      std::uniform_int_distribution<int> coin(0, 1);
      for (Eigen::Index i = 0; i < n; ++i)
        eps(i) = lin.residuals(i) * (coin(gen) ? 1.0 : -1.0);
    } else {
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      for (Eigen::Index i = 0; i < n; ++i) eps(i) = centered(pick(gen));
    }
    const Eigen::VectorXd ystar = detail::rebuild_linear_path(data, lin.pi1, eps);
    const TarData bdata = make_tar_data(ystar, data.x_full, cfg);
    const double lin_b = fit_linear(bdata.X, bdata.y).ssr;
    for (std::size_t i = 0; i < D; ++i) {
      const TarFit fit_b = grid_fit(bdata, cfg.with_delay(cfg.delays[i]));
      out[i].boot_draws[b] = (fit_b.ssr > 0.0)
                                 ? lr_statistic(lin_b, fit_b.ssr, bdata.rows())
                                 : std::numeric_limits<double>::infinity();
    }
  });

  for (auto& r : out) {
    int exceed = 0;
    for (double v : r.boot_draws)
      if (v >= r.lr) ++exceed;
    r.p_boot = (1.0 + exceed) / (opt.B + 1.0);
  }
  return out;
}

/// Criterion value behind msc_select, exposed for direct checks.
inline double msc_value(double delta, Eigen::Index t_eff, int k_params) {
  return delta - 2.0 * std::log(static_cast<double>(t_eff)) * k_params;
}

struct WaldTestResult {
  double delta = 0.0;
  int df = 0;
  double p = 1.0;
  std::string selector;
  double r_hat = 0.0;
  int d_hat = 0;
  bool singular_fallback = false;
};

/// Heteroskedasticity-consistent Wald statistic for the driver coefficients
/// at the fit's fixed (r, d). Regressors stack per regime, so the moment and
/// meat matrices are block diagonal; the restriction matrix selects every
/// theta in both regimes.
inline WaldTestResult wald_tgc(const Eigen::MatrixXd& X, const TarFit& fit,
                               const TarConfig& cfg) {
  const int p_max = cfg.max_p();
  const int q_max = cfg.max_q();
  const detail::RegimeCols rc1 = detail::regime_cols(cfg.p1, cfg.q1, p_max, q_max);
  const detail::RegimeCols rc2 = detail::regime_cols(cfg.p2, cfg.q2, p_max, q_max);
  const int m1 = rc1.width();
  const int m2 = rc2.width();
  const int df = cfg.q1 + cfg.q2;
  if (df < 1)
    throw config_error(ErrorCode::BadConfig, "wald_tgc: no driver coefficients to test");
  if (X.rows() != fit.residuals.size())
    throw data_error(ErrorCode::DimensionMismatch, "wald_tgc: design/fit row mismatch");

  Eigen::MatrixXd M1 = Eigen::MatrixXd::Zero(m1, m1);
  Eigen::MatrixXd M2 = Eigen::MatrixXd::Zero(m2, m2);
  Eigen::MatrixXd V1 = Eigen::MatrixXd::Zero(m1, m1);
  Eigen::MatrixXd V2 = Eigen::MatrixXd::Zero(m2, m2);
  Eigen::VectorXd w1(m1), w2(m2);
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    const double e2 = fit.residuals(t) * fit.residuals(t);
    if (fit.in_upper[static_cast<std::size_t>(t)]) {
      for (int k = 0; k < m2; ++k) w2(k) = X(t, rc2.cols[k]);
      M2.noalias() += w2 * w2.transpose();
      V2.noalias() += (w2 * w2.transpose()) * e2;
    } else {
      for (int k = 0; k < m1; ++k) w1(k) = X(t, rc1.cols[k]);
      M1.noalias() += w1 * w1.transpose();
      V1.noalias() += (w1 * w1.transpose()) * e2;
    }
  }

  WaldTestResult out;
  out.df = df;
  out.selector = "theta_all";
  out.r_hat = fit.r_hat;
  out.d_hat = fit.d_hat;

  // Asymptotic covariance of the stacked coefficients, regime by regime.
  auto cov_block = [&out](const Eigen::MatrixXd& M, const Eigen::MatrixXd& V) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) {
      out.singular_fallback = true;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
      const Eigen::MatrixXd Minv = cod.pseudoInverse();
      return Eigen::MatrixXd(Minv * V * Minv);
    }
    const Eigen::MatrixXd MiV = ldlt.solve(V);
    return Eigen::MatrixXd(ldlt.solve(MiV.transpose()).transpose());
  };
  const Eigen::MatrixXd C1 = cov_block(M1, V1);
  const Eigen::MatrixXd C2 = cov_block(M2, V2);

  // Selected coefficients and their covariance: thetas sit after the AR block
  // inside each regime's active column list.
  Eigen::VectorXd sel(df);
  Eigen::MatrixXd S(df, df);
  S.setZero();
  for (int j = 0; j < cfg.q1; ++j) sel(j) = fit.theta1(j);
  for (int j = 0; j < cfg.q2; ++j) sel(cfg.q1 + j) = fit.theta2(j);
  const int off1 = 1 + cfg.p1;  // theta start within regime-1 active columns
  const int off2 = 1 + cfg.p2;
  S.topLeftCorner(cfg.q1, cfg.q1) = C1.block(off1, off1, cfg.q1, cfg.q1);
  S.bottomRightCorner(cfg.q2, cfg.q2) = C2.block(off2, off2, cfg.q2, cfg.q2);

  Eigen::LDLT<Eigen::MatrixXd> sldlt(S);
  Eigen::VectorXd solved;
  if (sldlt.info() == Eigen::Success) {
    solved = sldlt.solve(sel);
    if ((S * solved - sel).cwiseAbs().maxCoeff() >
        1e-6 * std::max(1.0, sel.cwiseAbs().maxCoeff())) {
      out.singular_fallback = true;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(S);
      solved = cod.pseudoInverse() * sel;
    }
  } else {
    out.singular_fallback = true;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(S);
    solved = cod.pseudoInverse() * sel;
  }
  out.delta = std::max(0.0, sel.dot(solved));
  out.p = chi2_sf(out.delta, out.df);
  return out;
}

namespace detail {

inline std::vector<double> thin_values(std::vector<double> v, int max_n) {
  if (max_n <= 0 || static_cast<int>(v.size()) <= max_n) return v;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(max_n));
  const double step = static_cast<double>(v.size() - 1) / (max_n - 1);
  long last = -1;
  for (int i = 0; i < max_n; ++i) {
    const long idx = std::lround(i * step);
    if (idx != last) out.push_back(v[static_cast<std::size_t>(idx)]);
    last = idx;
  }
  return out;
}

}  // namespace detail

/// Sup of the Wald statistic over the candidate (r, d) grid; the p-value is
/// computed at the argmax as if that cell were fixed. max_r_per_delay > 0
/// subsamples the candidate thresholds evenly to bound cost.
inline WaldTestResult sup_wald(const TarData& data, const TarConfig& cfg,
                               int max_r_per_delay = 0) {
  cfg.validate();
  WaldTestResult best;
  bool found = false;
  std::vector<int> delays = cfg.delays;
  std::sort(delays.begin(), delays.end());
  delays.erase(std::unique(delays.begin(), delays.end()), delays.end());
  for (int d : delays) {
    const Eigen::VectorXd thr = row_threshold(data, d, cfg.threshold_fn);
    const auto rs =
        detail::thin_values(grid_candidates(data, cfg, d), max_r_per_delay);
    for (double r : rs) {
      TarFit fit;
      try {
        fit = fit_tar_at(data.X, data.y, thr, r, cfg);
      } catch (const Error&) {
        continue;
      }
      fit.d_hat = d;
      WaldTestResult w = wald_tgc(data.X, fit, cfg);
      if (!found || w.delta > best.delta) {
        best = w;
        found = true;
      }
    }
  }
  if (!found)
    throw numeric_error(ErrorCode::NoFeasibleSplit,
                        "sup_wald: empty candidate grid");
  return best;
}

inline WaldTestResult sup_wald(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                               const TarConfig& cfg, int max_r_per_delay = 0) {
  return sup_wald(make_tar_data(y, x, cfg), cfg, max_r_per_delay);
}

struct OrderSet {
  int p1 = 1, p2 = 1, q1 = 1, q2 = 1;
  int k_params() const { return p1 + p2 + q1 + q2 + 2; }
};

struct MscCandidate {
  OrderSet gamma;
  double delta = 0.0;
  double msc = 0.0;
};

struct MscRecord {
  double msc = 0.0;
  int k_params = 0;
  OrderSet gamma;
  TarFit fit;
  double delta = 0.0;
  Eigen::Index t_eff = 0;
  std::vector<MscCandidate> trail;
};

/// Modified Schwarz criterion over an order grid: each candidate's score is
/// its sup-Wald deviance minus 2*ln(T)*K, with K the coefficient count. All
/// candidates share one sample so T is comparable; driver-free candidates
/// score with deviance zero. Ties keep the earlier grid entry.
inline MscRecord msc_select(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                            const TarConfig& base_cfg,
                            const std::vector<OrderSet>& order_grid,
                            int max_r_per_delay = 0) {
  if (order_grid.empty())
    throw config_error(ErrorCode::EmptyGrid, "msc_select: no order candidates");

  int p_top = 0, q_top = 0;
  for (const auto& g : order_grid) {
    p_top = std::max({p_top, g.p1, g.p2});
    q_top = std::max({q_top, g.q1, g.q2});
  }
  const TarConfig top_cfg = base_cfg.with_orders(p_top, p_top, q_top, q_top);
  const int t0_shared = std::max(std::max(p_top, q_top), top_cfg.max_delay());

  MscRecord best;
  bool found = false;
  for (const auto& g : order_grid) {
    TarConfig cfg = base_cfg.with_orders(g.p1, g.p2, g.q1, g.q2);
    cfg.validate();
    const TarData data = make_tar_data(y, x, cfg, t0_shared);
    const Eigen::Index T = data.rows();
    double delta = 0.0;
    TarFit fit;
    if (g.q1 + g.q2 > 0) {
      const WaldTestResult w = sup_wald(data, cfg, max_r_per_delay);
      delta = w.delta;
      const Eigen::VectorXd thr = row_threshold(data, w.d_hat, cfg.threshold_fn);
      fit = fit_tar_at(data.X, data.y, thr, w.r_hat, cfg);
      fit.d_hat = w.d_hat;
    } else {
      fit = grid_fit(data, cfg);
    }
    const double score = msc_value(delta, T, g.k_params());
    best.trail.push_back({g, delta, score});
    if (!found || score > best.msc) {
      best.msc = score;
      best.k_params = g.k_params();
      best.gamma = g;
      best.fit = fit;
      best.delta = delta;
      best.t_eff = T;
      found = true;
    }
  }
  return best;
}

struct CombinedP {
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
  bool clamped = false;
};

/// Fisher's combination of independent p-values.
inline CombinedP combine_pvalues(const std::vector<double>& ps) {
  if (ps.empty())
    throw data_error(ErrorCode::EmptyList, "combine_pvalues: empty input");
  CombinedP out;
  double s = 0.0;
  for (double p : ps) {
    if (!(p > 0.0)) {
      p = 1e-15;
      out.clamped = true;
    } else if (p < 1e-15) {
      p = 1e-15;
      out.clamped = true;
    }
    if (p > 1.0)
      throw data_error(ErrorCode::OutOfRange, "combine_pvalues: p > 1");
    s += std::log(p);
  }
  out.chi2 = -2.0 * s;
  out.df = 2 * static_cast<int>(ps.size());
  out.p = chi2_sf(out.chi2, out.df);
  return out;
}

struct HotellingResult {
  double t2 = 0.0;
  double p = 1.0;
  bool shrunk = false;
  int n_perm = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double hotelling_t2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           bool& shrunk) {
  const Eigen::Index na = a.rows(), nb = b.rows(), k = a.cols();
  const Eigen::RowVectorXd ma = a.colwise().mean();
  const Eigen::RowVectorXd mb = b.colwise().mean();
  const Eigen::MatrixXd ca = a.rowwise() - ma;
  const Eigen::MatrixXd cb = b.rowwise() - mb;
  Eigen::MatrixXd pooled =
      (ca.transpose() * ca + cb.transpose() * cb) / static_cast<double>(na + nb - 2);
  const Eigen::VectorXd diff = (ma - mb).transpose();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(pooled);
  Eigen::VectorXd solved;
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    solved = ldlt.solve(diff);
    ok = (pooled * solved - diff).cwiseAbs().maxCoeff() <=
         1e-8 * std::max(1.0, diff.cwiseAbs().maxCoeff());
  }
  if (!ok) {
    shrunk = true;
    const double bump = 1e-8 * pooled.trace() / static_cast<double>(k);
    pooled.diagonal().array() += (bump > 0.0 ? bump : 1e-12);
    Eigen::LDLT<Eigen::MatrixXd> again(pooled);
    if (again.info() == Eigen::Success) {
      solved = again.solve(diff);
    } else {
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(pooled);
      solved = cod.pseudoInverse() * diff;
    }
  }
  const double scale =
      static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(na + nb);
  return std::max(0.0, scale * diff.dot(solved));
}

}  // namespace detail

/// Two-sample Hotelling T^2 with a permutation null: rows are pooled, sorted
/// into a canonical order so the result ignores input row order, and group
/// labels are reshuffled n_perm times.
inline HotellingResult hotelling_permutation(const Eigen::MatrixXd& a,
                                             const Eigen::MatrixXd& b, int n_perm,
                                             std::uint64_t seed) {
  if (a.cols() != b.cols())
    throw data_error(ErrorCode::DimensionMismatch,
                     "hotelling_permutation: column counts differ");
  if (a.rows() < 2 || b.rows() < 2)
    throw data_error(ErrorCode::TooShort, "hotelling_permutation: need >= 2 rows per group");
  if (n_perm < 1)
    throw config_error(ErrorCode::BadConfig, "hotelling_permutation: n_perm must be >= 1");

  HotellingResult out;
  out.n_perm = n_perm;
  out.seed = seed;
  out.t2 = detail::hotelling_t2(a, b, out.shrunk);

  const Eigen::Index na = a.rows(), nb = b.rows(), k = a.cols();
  std::vector<Eigen::RowVectorXd> pool;
  pool.reserve(static_cast<std::size_t>(na + nb));
  for (Eigen::Index i = 0; i < na; ++i) pool.push_back(a.row(i));
  for (Eigen::Index i = 0; i < nb; ++i) pool.push_back(b.row(i));
  std::sort(pool.begin(), pool.end(),
            [](const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v) {
              return std::lexicographical_compare(u.data(), u.data() + u.size(),
                                                  v.data(), v.data() + v.size());
            });

  int exceed = 0;
  std::vector<Eigen::Index> idx(pool.size());
  Eigen::MatrixXd pa(na, k), pb(nb, k);
  for (int perm = 0; perm < n_perm; ++perm) {
    auto gen = substream(seed, static_cast<std::uint64_t>(perm) + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), gen);
    for (Eigen::Index i = 0; i < na; ++i) pa.row(i) = pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    for (Eigen::Index i = 0; i < nb; ++i)
      pb.row(i) = pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(na + i)])];
    bool ignore = false;
    if (detail::hotelling_t2(pa, pb, ignore) >= out.t2) ++exceed;
  }
  out.p = (1.0 + exceed) / (n_perm + 1.0);
  return out;
}

}  // namespace tar4c
